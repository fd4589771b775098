#include <gtest/gtest.h>

#include <set>

#include "chimera/core.hpp"

using namespace chimera;

namespace {

// Brute force: every m != l whose ring distance from l is at most d.
std::set<std::size_t> brute_neighbors(int N, int d, std::size_t l) {
  std::set<std::size_t> out;
  for (int m = 0; m < N; ++m) {
    const int diff = std::abs(m - static_cast<int>(l));
    const int dist = std::min(diff, N - diff);
    if (m != static_cast<int>(l) && dist <= d) out.insert(static_cast<std::size_t>(m));
  }
  return out;
}

}  // namespace

TEST(Params, DefaultValuesAreValid) {
  NetworkParams p;
  EXPECT_NO_THROW(validate_params(p));
  EXPECT_NEAR(p.limit_cycle_radius(), 1.5811388300841898, 1e-15);
  EXPECT_DOUBLE_EQ(p.coupling(), 0.06);
}

TEST(Params, OverlappingWindowNamesD) {
  NetworkParams p;
  p.d = 30;
  try {
    validate_params(p);
    FAIL() << "expected RangeError";
  } catch (const RangeError& e) {
    EXPECT_EQ(e.field(), "d");
  }
}

TEST(Params, OddAllToAll) {
  NetworkParams p;
  p.N = 3;
  p.d = 2;
  EXPECT_NO_THROW(validate_params(p));
  EXPECT_TRUE(p.all_to_all());
  p.N = 4;
  EXPECT_THROW(validate_params(p), RangeError);
}

TEST(Params, EachFieldIsChecked) {
  auto field_of = [](NetworkParams p) {
    try {
      validate_params(p);
    } catch (const RangeError& e) {
      return e.field();
    }
    return std::string{};
  };
  NetworkParams p;
  auto q = p; q.N = 1; EXPECT_EQ(field_of(q), "N");
  q = p; q.d = 0; EXPECT_EQ(field_of(q), "d");
  q = p; q.kappa1 = 0; EXPECT_EQ(field_of(q), "kappa1");
  q = p; q.kappa2 = -1; EXPECT_EQ(field_of(q), "kappa2");
  q = p; q.hbar = 0; EXPECT_EQ(field_of(q), "hbar");
  q = p; q.V = -0.1; EXPECT_EQ(field_of(q), "V");
}

TEST(Ring, LabelsWrap) {
  EXPECT_EQ(RingIndex::from_label(1, 50).index(), 0u);
  EXPECT_EQ(RingIndex::from_label(51, 50).index(), 0u);
  EXPECT_EQ(RingIndex::from_label(0, 50).index(), 49u);
  EXPECT_EQ(RingIndex::from_label(-50, 50).index(), 49u);
  EXPECT_EQ(RingIndex(7).label(), 8);
  EXPECT_EQ(RingIndex(7).q_row(), 14u);
  EXPECT_EQ(RingIndex(7).p_row(), 15u);
}

TEST(Ring, NeighboursMatchBruteForce) {
  for (auto [N, d] : std::vector<std::pair<int, int>>{{50, 10}, {3, 1}, {3, 2}, {7, 3}, {21, 10}, {2, 1}}) {
    if (N == 2) continue;  // 2d = 2 > N - 1
    NetworkParams p;
    p.N = N;
    p.d = d;
    const Ring ring(p);
    for (int l = 0; l < N; ++l) {
      std::set<std::size_t> got;
      for (auto m : ring.neighbors_of(static_cast<std::size_t>(l))) got.insert(m.index());
      EXPECT_EQ(got, brute_neighbors(N, d, static_cast<std::size_t>(l))) << N << " " << d << " " << l;
      EXPECT_EQ(got.size(), ring.neighbors_of(static_cast<std::size_t>(l)).size());
    }
  }
}

TEST(Ring, NeighbourRelationIsSymmetricWithEqualCounts) {
  NetworkParams p;
  const Ring ring(p);
  for (std::size_t l = 0; l < ring.size(); ++l) {
    EXPECT_EQ(ring.neighbors_of(l).size(), 20u);
    for (auto m : ring.neighbors_of(l)) {
      const auto& back = ring.neighbors_of(m.index());
      EXPECT_NE(std::find(back.begin(), back.end(), RingIndex(l)), back.end());
    }
  }
}

TEST(Physicality, VacuumHasZeroMargin) {
  const Eigen::MatrixXd C = 0.5 * Eigen::MatrixXd::Identity(6, 6);
  EXPECT_NEAR(physicality_margin(C, 1.0), 0.0, 1e-14);
  EXPECT_NEAR(physicality_margin(0.25 * Eigen::MatrixXd::Identity(6, 6), 1.0), -0.25, 1e-14);
  EXPECT_NEAR(physicality_margin(Eigen::MatrixXd::Identity(4, 4), 2.0), 0.0, 1e-14);
}

TEST(Physicality, SymplecticForm) {
  const auto O = symplectic_form(2);
  EXPECT_EQ(O(0, 1), 1.0);
  EXPECT_EQ(O(1, 0), -1.0);
  EXPECT_EQ(O(0, 3), 0.0);
  EXPECT_TRUE((O * O + Eigen::MatrixXd::Identity(4, 4)).isZero());
}

TEST(Shift, MovesSiteBlocks) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(6, 6);
  C(0, 3) = C(3, 0) = 7.0;  // q1 with p2
  const auto S = cyclic_shift(C, 1);
  EXPECT_EQ(S(2, 5), 7.0);  // q2 with p3
  EXPECT_EQ(S(5, 2), 7.0);
  EXPECT_TRUE(cyclic_shift(S, -1).isApprox(C));
  Eigen::VectorXcd v(3);
  v << 1.0, 2.0, 3.0;
  EXPECT_EQ(cyclic_shift(v, 1)(0), Complex(3.0));
}
