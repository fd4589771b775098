#pragma once

// Shared parameter, topology and state types for the ring of nonlocally
// coupled quantum Van der Pol oscillators.
//
// Units: kappa1 sets the time unit, every rate is a multiple of kappa1, and
// quadrature variances are measured in units of hbar.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chimera {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

/// A parameter lies outside its admissible range. `field()` names it.
class RangeError : public Error {
public:
  RangeError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "RangeError"; }

private:
  std::string field_;
};

class DivergenceError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "DivergenceError"; }
};

class PhysicalityError : public Error {
public:
  PhysicalityError(const std::string& what, double margin)
      : Error(what), margin_(margin) {}
  double margin() const noexcept { return margin_; }
  const char* kind() const noexcept override { return "PhysicalityError"; }

private:
  double margin_;
};

class SingularMatrixError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "SingularMatrix"; }
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "InsufficientData"; }
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct NetworkParams {
  int N = 50;          // oscillators on the ring
  int d = 10;          // coupling range in sites
  double V = 1.2;      // coupling strength
  double kappa1 = 1.0; // gain rate, the reference rate
  double kappa2 = 0.2; // nonlinear damping rate
  double hbar = 1.0;

  /// Radius of the uncoupled limit cycle, sqrt(kappa1 / (2 kappa2)).
  double limit_cycle_radius() const { return std::sqrt(kappa1 / (2.0 * kappa2)); }

  /// Coupling coefficient per ordered neighbour pair. The literal 2d is kept
  /// even when the window wraps onto the whole ring.
  double coupling() const { return V / (2.0 * d); }

  /// True when the window covers every other site (d = (N+1)/2 for odd N).
  bool all_to_all() const { return 2 * d >= N - 1; }

  bool operator==(const NetworkParams&) const = default;
};

/// Returns `p` unchanged when every invariant holds, throws RangeError naming
/// the first violated field otherwise.
inline NetworkParams validate_params(const NetworkParams& p) {
  if (p.N < 2) throw RangeError("N", "ring needs at least 2 oscillators");
  if (p.d < 1) throw RangeError("d", "coupling range must be >= 1");
  const bool odd_all_to_all = (p.N % 2 == 1) && (2 * p.d == p.N + 1);
  if (2 * p.d > p.N - 1 && !odd_all_to_all)
    throw RangeError("d", "coupling window of " + std::to_string(2 * p.d) +
                              " sites overlaps itself on a ring of " +
                              std::to_string(p.N));
  if (!(p.kappa1 > 0.0) || !std::isfinite(p.kappa1))
    throw RangeError("kappa1", "must be > 0");
  if (!(p.kappa2 > 0.0) || !std::isfinite(p.kappa2))
    throw RangeError("kappa2", "must be > 0");
  if (!(p.hbar > 0.0) || !std::isfinite(p.hbar)) throw RangeError("hbar", "must be > 0");
  if (!(p.V >= 0.0) || !std::isfinite(p.V)) throw RangeError("V", "must be >= 0");
  return p;
}

// ---------------------------------------------------------------------------
// Ring topology
// ---------------------------------------------------------------------------

/// Site on the ring. Stored 0-based; `label()` gives the 1-based I/O label.
class RingIndex {
public:
  constexpr RingIndex() = default;
  constexpr RingIndex(std::size_t zero_based) : index_(zero_based) {}

  /// Wraps any integer label (1-based, periodic) onto the ring of size n.
  static RingIndex from_label(long long label, int n) {
    long long r = (label - 1) % n;
    if (r < 0) r += n;
    return RingIndex(static_cast<std::size_t>(r));
  }

  constexpr std::size_t index() const { return index_; }
  constexpr int label() const { return static_cast<int>(index_) + 1; }

  /// Quadrature rows in the (q1, p1, ..., qN, pN) ordering.
  constexpr std::size_t q_row() const { return 2 * index_; }
  constexpr std::size_t p_row() const { return 2 * index_ + 1; }

  constexpr auto operator<=>(const RingIndex&) const = default;

private:
  std::size_t index_ = 0;
};

/// Sites m in l-d ... l+d, m != l, wrapped modulo N, each counted once.
/// Ordered by offset from l (l-d first), duplicates dropped on first sight.
inline std::vector<RingIndex> neighbors(const NetworkParams& p, RingIndex l) {
  std::vector<RingIndex> out;
  out.reserve(static_cast<std::size_t>(2 * p.d));
  std::vector<bool> seen(static_cast<std::size_t>(p.N), false);
  seen[l.index()] = true;
  for (long long off = -p.d; off <= p.d; ++off) {
    if (off == 0) continue;
    const auto m = RingIndex::from_label(l.label() + off, p.N);
    if (seen[m.index()]) continue;
    seen[m.index()] = true;
    out.push_back(m);
  }
  return out;
}

/// Precomputed neighbour lists for a validated parameter set.
class Ring {
public:
  explicit Ring(const NetworkParams& p) : params_(validate_params(p)) {
    lists_.reserve(static_cast<std::size_t>(p.N));
    for (int l = 0; l < p.N; ++l)
      lists_.push_back(neighbors(p, RingIndex(static_cast<std::size_t>(l))));
  }

  const NetworkParams& params() const { return params_; }
  std::size_t size() const { return lists_.size(); }
  const std::vector<RingIndex>& neighbors_of(std::size_t l) const { return lists_[l]; }

private:
  NetworkParams params_;
  std::vector<std::vector<RingIndex>> lists_;
};

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

struct MeanFieldState {
  double t = 0.0;
  Eigen::VectorXcd alphas;

  std::size_t size() const { return static_cast<std::size_t>(alphas.size()); }
  bool finite() const { return alphas.allFinite(); }
};

/// Quadrature covariance, rows ordered (q1, p1, ..., qN, pN), units of hbar.
struct CovarianceMatrix {
  double t = 0.0;
  Eigen::MatrixXd C;

  std::size_t modes() const { return static_cast<std::size_t>(C.rows() / 2); }
};

/// Standard symplectic form, block diagonal with [[0, 1], [-1, 0]].
inline Eigen::MatrixXd symplectic_form(std::size_t modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (std::size_t l = 0; l < modes; ++l) {
    omega(2 * l, 2 * l + 1) = 1.0;
    omega(2 * l + 1, 2 * l) = -1.0;
  }
  return omega;
}

/// Smallest eigenvalue of the Hermitian matrix C + i(hbar/2)Omega. A Gaussian
/// state is physical iff this is >= 0.
inline double physicality_margin(const Eigen::MatrixXd& C, double hbar) {
  const auto n = static_cast<std::size_t>(C.rows() / 2);
  Eigen::MatrixXcd H = C.cast<Complex>();
  H += Complex(0.0, 0.5 * hbar) * symplectic_form(n).cast<Complex>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline void symmetrize(Eigen::MatrixXd& C) {
  C = (0.5 * (C + C.transpose())).eval();
}

/// Relabels sites l -> l + shift (mod N) by permuting quadrature pairs.
inline Eigen::MatrixXd cyclic_shift(const Eigen::MatrixXd& C, long long shift) {
  const auto n = static_cast<int>(C.rows() / 2);
  Eigen::MatrixXd out(C.rows(), C.cols());
  for (int l = 0; l < n; ++l) {
    const auto ls = RingIndex::from_label(l + 1 + shift, n).index();
    for (int m = 0; m < n; ++m) {
      const auto ms = RingIndex::from_label(m + 1 + shift, n).index();
      out.block<2, 2>(2 * ls, 2 * ms) = C.block<2, 2>(2 * l, 2 * m);
    }
  }
  return out;
}

inline Eigen::VectorXcd cyclic_shift(const Eigen::VectorXcd& v, long long shift) {
  const auto n = static_cast<int>(v.size());
  Eigen::VectorXcd out(n);
  for (int l = 0; l < n; ++l) out(RingIndex::from_label(l + 1 + shift, n).index()) = v(l);
  return out;
}

}  // namespace chimera
