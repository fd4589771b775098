#include <gtest/gtest.h>

#include <numbers>

#include "chimera/analysis.hpp"
#include "chimera/fluctuations.hpp"

using namespace chimera;

namespace {

NetworkParams small(int N = 8, int d = 2) {
  NetworkParams p;
  p.N = N;
  p.d = d;
  return p;
}

Eigen::Matrix2d rotated(double a, double b, double phi) {
  Eigen::Matrix2d R;
  R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return R * Eigen::Vector2d(a, b).asDiagonal() * R.transpose();
}

// A physical correlated state: vacuum pushed through a random symplectic
// transformation built from local squeezers and beam splitters, plus noise.
Eigen::MatrixXd random_physical(int N, unsigned seed, double hbar = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(2 * N, 2 * N);
  for (int round = 0; round < 3; ++round) {
    for (int l = 0; l < N; ++l) {
      Eigen::MatrixXd L = Eigen::MatrixXd::Identity(2 * N, 2 * N);
      const double r = 0.5 * u(rng);
      L.block<2, 2>(2 * l, 2 * l) = rotated(std::exp(-r), std::exp(r), u(rng) * 3.0);
      S = L * S;
    }
    for (int l = 0; l + 1 < N; ++l) {
      const double th = u(rng) * 1.5;
      Eigen::MatrixXd Bs = Eigen::MatrixXd::Identity(2 * N, 2 * N);
      for (int k = 0; k < 2; ++k) {
        const int i = 2 * l + k, j = 2 * (l + 1) + k;
        Bs(i, i) = Bs(j, j) = std::cos(th);
        Bs(i, j) = std::sin(th);
        Bs(j, i) = -std::sin(th);
      }
      S = Bs * S;
    }
  }
  Eigen::MatrixXd C = 0.5 * hbar * S * S.transpose();
  return C + 0.05 * hbar * Eigen::MatrixXd::Identity(2 * N, 2 * N);
}

}  // namespace

TEST(Psi, VacuumIsZero) {
  const auto p = small();
  for (double v : weighted_correlation(p, vacuum_covariance(p))) EXPECT_EQ(v, 0.0);
}

TEST(Psi, SingleMomentumCorrelation) {
  const auto p = small();
  auto C = vacuum_covariance(p);
  C.C(1, 3) = C.C(3, 1) = 0.4;  // p1 with p2
  C.C(0, 2) = C.C(2, 0) = 9.0;  // q-q entries do not enter
  const auto psi = weighted_correlation(p, C);
  EXPECT_DOUBLE_EQ(psi[0], p.coupling() * 0.4);
  EXPECT_DOUBLE_EQ(psi[1], p.coupling() * 0.4);
  for (std::size_t l = 2; l < psi.size(); ++l) EXPECT_EQ(psi[l], 0.0);
}

TEST(Ellipse, VacuumIsRound) {
  const auto e = ellipse_of(0.5 * Eigen::Matrix2d::Identity());
  EXPECT_DOUBLE_EQ(e.lambda_min, 0.5);
  EXPECT_DOUBLE_EQ(e.lambda_max, 0.5);
  EXPECT_EQ(e.theta, 0.0);
  EXPECT_FALSE(e.squeezed(1.0));
}

TEST(Ellipse, AxisAlignedSqueezing) {
  const double hbar = 2.0;
  auto e = ellipse_of(Eigen::Vector2d(hbar / 4, hbar).asDiagonal().toDenseMatrix());
  EXPECT_DOUBLE_EQ(e.lambda_min, hbar / 4);
  EXPECT_DOUBLE_EQ(e.lambda_max, hbar);
  EXPECT_NEAR(e.theta, 0.0, 1e-15);
  EXPECT_TRUE(e.squeezed(hbar));
  e = ellipse_of(Eigen::Vector2d(hbar, hbar / 4).asDiagonal().toDenseMatrix());
  EXPECT_NEAR(e.theta, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(e.arrow_angle(), std::numbers::pi, 1e-15);
}

TEST(Ellipse, RotatedMinorAxis) {
  for (double phi : {-1.2, -0.4, 0.3, 1.0, 1.5}) {
    const auto e = ellipse_of(rotated(0.2, 0.9, phi));
    EXPECT_NEAR(e.lambda_min, 0.2, 1e-14);
    EXPECT_NEAR(e.lambda_max, 0.9, 1e-14);
    EXPECT_NEAR(e.theta, phi, 1e-12);
  }
}

TEST(Ellipse, CircularVariance) {
  EXPECT_NEAR(axial_circular_variance({0.3, 0.3, 0.3}), 0.0, 1e-15);
  // θ and θ + π/2 are opposite on the doubled circle.
  EXPECT_NEAR(axial_circular_variance({0.1, 0.1 + std::numbers::pi / 2}), 0.0 + 1.0, 1e-15);
  // Axial: θ and θ - π describe the same axis.
  EXPECT_NEAR(axial_circular_variance({1.2, 1.2 - std::numbers::pi}), 0.0, 1e-14);
}

TEST(Husimi, MatchesNumericalConvolution) {
  NetworkParams p = small(3, 1);
  p.hbar = 0.8;
  CovarianceMatrix C{0.0, 0.5 * p.hbar * Eigen::MatrixXd::Identity(6, 6)};
  C.C.block<2, 2>(2, 2) = rotated(0.15, 1.1, 0.6);
  const Eigen::Matrix2d W = C.C.block<2, 2>(2, 2);
  const Eigen::Matrix2d Winv = W.inverse();
  const double s2 = 0.5 * p.hbar;  // coherent-state kernel variance per quadrature

  // Q = W * K on a grid, then second moments of Q.
  const int n = 61;
  const double L = 6.0, h = 2 * L / (n - 1);
  auto wig = [&](double x, double y) {
    const Eigen::Vector2d v(x, y);
    return std::exp(-0.5 * v.dot(Winv * v));
  };
  Eigen::MatrixXd wgrid(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) wgrid(i, j) = wig(-L + i * h, -L + j * h);
  double z = 0, mqq = 0, mqp = 0, mpp = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -L + i * h, y = -L + j * h;
      double q = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double dx = x - (-L + a * h), dy = y - (-L + b * h);
          q += wgrid(a, b) * std::exp(-(dx * dx + dy * dy) / (2 * s2));
        }
      z += q;
      mqq += q * x * x;
      mqp += q * x * y;
      mpp += q * y * y;
    }
  const auto Q = husimi_marginal(p, C, RingIndex(1));
  EXPECT_NEAR(Q(0, 0), mqq / z, 1e-6);
  EXPECT_NEAR(Q(0, 1), mqp / z, 1e-6);
  EXPECT_NEAR(Q(1, 1), mpp / z, 1e-6);
}

TEST(Husimi, SqueezedDiagonal) {
  NetworkParams p = small(3, 1);
  p.hbar = 1.6;
  CovarianceMatrix C{0.0, 0.5 * p.hbar * Eigen::MatrixXd::Identity(6, 6)};
  C.C(0, 0) = p.hbar / 4;
  C.C(1, 1) = p.hbar;
  const auto Q = husimi_marginal(p, C, RingIndex(0));
  EXPECT_DOUBLE_EQ(Q(0, 0), 0.75 * p.hbar);
  EXPECT_DOUBLE_EQ(Q(1, 1), 1.5 * p.hbar);
  EXPECT_EQ(Q(0, 1), 0.0);
}

TEST(Entropy, VacuumAndThermal) {
  for (double hbar : {1.0, 0.3}) {
    NetworkParams p = small();
    p.hbar = hbar;
    EXPECT_EQ(renyi2_entropy(p, vacuum_covariance(p).C), 0.0);
    const Eigen::MatrixXd thermal = hbar * Eigen::MatrixXd::Identity(2, 2);
    EXPECT_NEAR(renyi2_entropy(p, thermal), std::log(2.0), 1e-15);
  }
}

TEST(Entropy, HbarInvariance) {
  NetworkParams p = small(4, 1), q = p;
  q.hbar = 3.0;
  const auto C = random_physical(4, 1);
  EXPECT_NEAR(renyi2_entropy(p, C), renyi2_entropy(q, 3.0 * C), 1e-12);
}

TEST(Entropy, SingularThrows) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(4, 4);
  C(3, 3) = 0.0;
  EXPECT_THROW(log_det_spd(C), SingularMatrixError);
  C(3, 3) = -1.0;
  EXPECT_THROW(log_det_spd(C), SingularMatrixError);
}

TEST(MutualInformation, VacuumAndProductStates) {
  const auto p = small();
  for (int L = 1; L < p.N; ++L) EXPECT_NEAR(mutual_information(p, vacuum_covariance(p), {L, 1}), 0.0, 1e-12);
  auto C = vacuum_covariance(p);
  C.C.topLeftCorner(6, 6) = random_physical(3, 4);
  EXPECT_NEAR(mutual_information(p, C, {3, 1}), 0.0, 1e-12);
  EXPECT_GT(mutual_information(p, C, {2, 1}), 1e-3);
}

TEST(MutualInformation, EqualsEntropyCombination) {
  const auto p = small();
  const CovarianceMatrix C{0.0, random_physical(p.N, 7)};
  for (int L = 1; L < p.N; ++L) {
    std::vector<int> a, b, all;
    for (int l = 1; l <= p.N; ++l) (l <= L ? a : b).push_back(l), all.push_back(l);
    const double combo = renyi2_entropy(p, sub_covariance(C.C, a)) +
                         renyi2_entropy(p, sub_covariance(C.C, b)) -
                         renyi2_entropy(p, sub_covariance(C.C, all));
    EXPECT_NEAR(mutual_information(p, C, {L, 1}), combo, 1e-12);
    EXPECT_GE(mutual_information(p, C, {L, 1}), -1e-9);
  }
}

TEST(MutualInformation, MatchedRelabeling) {
  const auto p = small();
  const CovarianceMatrix C{0.0, random_physical(p.N, 9)};
  for (int anchor : {2, 5, 8})
    for (int L : {1, 3, 6}) {
      const CovarianceMatrix shifted{0.0, cyclic_shift(C.C, 3)};
      EXPECT_NEAR(mutual_information(p, C, {L, anchor}),
                  mutual_information(p, shifted, {L, anchor + 3}), 1e-12);
    }
  const auto scan = mi_scan(p, C, 4);
  for (const auto& m : scan) EXPECT_NEAR(m.I2, mutual_information(p, C, {m.L, 4}), 1e-12);
  // Complementary partitions share I₂.
  EXPECT_NEAR(mutual_information(p, C, {3, 1}), mutual_information(p, C, {5, 4}), 1e-12);
}

TEST(MutualInformation, PartitionRange) {
  const auto p = small();
  EXPECT_THROW(mutual_information(p, vacuum_covariance(p), {0, 1}), RangeError);
  EXPECT_THROW(mutual_information(p, vacuum_covariance(p), {p.N, 1}), RangeError);
}

TEST(ScanShape, GradientAndAsymmetry) {
  std::vector<MiPoint> scan;
  for (int L = 1; L < 10; ++L) scan.push_back({L, L < 6 ? 0.1 * L : 1.0 + 0.01 * L});
  EXPECT_EQ(max_gradient_point(scan), 5);
  EXPECT_EQ(max_gradient_point(scan, 6, 9), 6);
  EXPECT_GT(mi_asymmetry(scan), 0.1);
  std::vector<MiPoint> sym;
  for (int L = 1; L < 10; ++L) sym.push_back({L, std::min(L, 10 - L) * 1.0});
  EXPECT_EQ(mi_asymmetry(sym), 0.0);
}

TEST(Record, AnalyzeBundlesEverything) {
  const auto p = small();
  const CovarianceMatrix C{2.5, random_physical(p.N, 3)};
  const auto rec = analyze(p, C);
  EXPECT_EQ(rec.t, 2.5);
  EXPECT_EQ(rec.Psi.size(), 8u);
  EXPECT_EQ(rec.ellipses.size(), 8u);
  EXPECT_EQ(rec.MI_scan.size(), 7u);
  EXPECT_GT(rec.S2_total, 0.0);
  EXPECT_FALSE(rec.regime.has_value());
}
