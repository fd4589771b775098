#pragma once

// Quantum signatures read off a quadrature covariance matrix: weighted
// correlations, single-site squeezing ellipses, Husimi marginals, Gaussian
// Rényi-2 entropies and bipartite mutual information.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "chimera/core.hpp"
#include "chimera/meanfield.hpp"

namespace chimera {

/// Alice holds sites anchor, ..., anchor+L-1 (1-based, wrapped); Bob the rest.
struct Partition {
  int L = 1;
  int anchor = 1;
};

inline void validate_partition(const NetworkParams& p, const Partition& part) {
  if (part.L < 1 || part.L > p.N - 1) throw RangeError("L", "must satisfy 1 <= L <= N-1");
}

/// Ψ_l = (V/2d) Σ_{m ∈ nbrs(l)} C_{p_l, p_m}.
inline std::vector<double> weighted_correlation(const NetworkParams& p,
                                                const CovarianceMatrix& C) {
  const Ring ring(p);
  std::vector<double> psi(ring.size(), 0.0);
  for (std::size_t l = 0; l < ring.size(); ++l) {
    const auto pl = static_cast<Eigen::Index>(RingIndex(l).p_row());
    double sum = 0.0;
    for (const auto m : ring.neighbors_of(l)) sum += C.C(pl, static_cast<Eigen::Index>(m.p_row()));
    psi[l] = p.coupling() * sum;
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Squeezing
// ---------------------------------------------------------------------------

struct SqueezingEllipse {
  RingIndex site;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double theta = 0.0;  // minor axis, from +q, in (-π/2, π/2]

  bool squeezed(double hbar) const { return lambda_min < 0.5 * hbar; }
  /// Direction drawn as an arrow in phase-space plots, perpendicular to theta.
  double arrow_angle() const { return theta + 0.5 * std::numbers::pi; }
};

/// Eigen-decomposition of a symmetric 2x2 marginal [[a, b], [b, c]].
inline SqueezingEllipse ellipse_of(const Eigen::Matrix2d& m, RingIndex site = {}) {
  const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  SqueezingEllipse e;
  e.site = site;
  e.lambda_min = mean - radius;
  e.lambda_max = mean + radius;
  if (radius <= 1e-14 * (std::abs(a) + std::abs(c))) {
    e.theta = 0.0;
    return e;
  }
  double minor = 0.5 * std::atan2(2.0 * b, a - c) + 0.5 * std::numbers::pi;
  while (minor > 0.5 * std::numbers::pi) minor -= std::numbers::pi;
  while (minor <= -0.5 * std::numbers::pi) minor += std::numbers::pi;
  e.theta = minor;
  return e;
}

inline Eigen::Matrix2d site_marginal(const CovarianceMatrix& C, RingIndex site) {
  const auto q = static_cast<Eigen::Index>(site.q_row());
  return C.C.block<2, 2>(q, q);
}

inline std::vector<SqueezingEllipse> squeezing(const NetworkParams& p, const CovarianceMatrix& C) {
  std::vector<SqueezingEllipse> out;
  out.reserve(static_cast<std::size_t>(p.N));
  for (int l = 0; l < p.N; ++l) {
    const RingIndex site(static_cast<std::size_t>(l));
    out.push_back(ellipse_of(site_marginal(C, site), site));
  }
  return out;
}

/// Circular variance of axial angles (period π): 1 - |⟨e^{2iθ}⟩|.
inline double axial_circular_variance(const std::vector<double>& angles) {
  if (angles.empty()) return 0.0;
  Complex sum(0.0, 0.0);
  for (double a : angles) sum += std::polar(1.0, 2.0 * a);
  return 1.0 - std::abs(sum) / static_cast<double>(angles.size());
}

/// Husimi Q marginal of one site: Gaussian smoothing by the coherent-state
/// kernel adds ħ/2 to each quadrature variance.
inline Eigen::Matrix2d husimi_marginal(const NetworkParams& p, const CovarianceMatrix& C,
                                       RingIndex site) {
  return site_marginal(C, site) + 0.5 * p.hbar * Eigen::Matrix2d::Identity();
}

// ---------------------------------------------------------------------------
// Entropies
// ---------------------------------------------------------------------------

/// ln det of a symmetric positive definite matrix, accumulated in the log
/// domain from its Cholesky factor.
inline double log_det_spd(const Eigen::MatrixXd& M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("matrix is not positive definite");
  const auto& L = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    const double d = L(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) throw SingularMatrixError("non-positive pivot");
    sum += std::log(d);
  }
  return 2.0 * sum;
}

/// S₂ = ½ ln det(2C/ħ); zero for pure Gaussian states.
inline double renyi2_entropy(const NetworkParams& p, const Eigen::MatrixXd& C_sub) {
  return 0.5 * log_det_spd((2.0 / p.hbar) * C_sub);
}

/// Covariance of the listed sites (1-based labels), in the listed order.
inline Eigen::MatrixXd sub_covariance(const Eigen::MatrixXd& C, const std::vector<int>& labels) {
  const auto n = static_cast<int>(C.rows() / 2);
  const auto k = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd out(2 * k, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto a = static_cast<Eigen::Index>(RingIndex::from_label(labels[i], n).q_row());
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto b = static_cast<Eigen::Index>(RingIndex::from_label(labels[j], n).q_row());
      out.block<2, 2>(2 * i, 2 * j) = C.block<2, 2>(a, b);
    }
  }
  return out;
}

/// I₂(A:B) = ½ ln(det C_A det C_B / det C).
inline double mutual_information(const NetworkParams& p, const CovarianceMatrix& C,
                                 const Partition& part) {
  validate_partition(p, part);
  const Eigen::MatrixXd shifted =
      part.anchor == 1 ? C.C : cyclic_shift(C.C, -static_cast<long long>(part.anchor - 1));
  const auto a = static_cast<Eigen::Index>(2 * part.L);
  const auto b = shifted.rows() - a;
  return 0.5 * (log_det_spd(shifted.topLeftCorner(a, a)) +
                log_det_spd(shifted.bottomRightCorner(b, b)) - log_det_spd(shifted));
}

struct MiPoint {
  int L = 0;
  double I2 = 0.0;
};

/// I₂ for L = 1 ... N-1 with Alice anchored at `anchor` (site 1 by default).
inline std::vector<MiPoint> mi_scan(const NetworkParams& p, const CovarianceMatrix& C,
                                    int anchor = 1) {
  const Eigen::MatrixXd shifted =
      anchor == 1 ? C.C : cyclic_shift(C.C, -static_cast<long long>(anchor - 1));
  const double total = log_det_spd(shifted);
  std::vector<MiPoint> out;
  out.reserve(static_cast<std::size_t>(p.N - 1));
  for (int L = 1; L < p.N; ++L) {
    const auto a = static_cast<Eigen::Index>(2 * L);
    const auto b = shifted.rows() - a;
    out.push_back({L, 0.5 * (log_det_spd(shifted.topLeftCorner(a, a)) +
                             log_det_spd(shifted.bottomRightCorner(b, b)) - total)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scan shape
// ---------------------------------------------------------------------------

/// L at which |I₂(L+1) - I₂(L)| is largest, reported as the L before the jump.
inline int max_gradient_point(const std::vector<MiPoint>& scan) {
  int best = scan.empty() ? 0 : scan.front().L;
  double best_jump = -1.0;
  for (std::size_t k = 0; k + 1 < scan.size(); ++k) {
    const double jump = std::abs(scan[k + 1].I2 - scan[k].I2);
    if (jump > best_jump) {
      best_jump = jump;
      best = scan[k].L;
    }
  }
  return best;
}

/// As above, restricted to jumps with both ends in [lo, hi]. The ramp at the
/// scan ends (L < d, L > N-d) is excluded by passing lo = d, hi = N-d.
inline int max_gradient_point(const std::vector<MiPoint>& scan, int lo, int hi) {
  std::vector<MiPoint> inner;
  for (const auto& m : scan)
    if (m.L >= lo && m.L <= hi) inner.push_back(m);
  return max_gradient_point(inner);
}

/// max_L |I₂(L) - I₂(N-L)| / max_L I₂(L); zero for a mirror-symmetric scan.
inline double mi_asymmetry(const std::vector<MiPoint>& scan) {
  double peak = 0.0, worst = 0.0;
  const auto n = scan.size();
  for (std::size_t k = 0; k < n; ++k) {
    peak = std::max(peak, std::abs(scan[k].I2));
    worst = std::max(worst, std::abs(scan[k].I2 - scan[n - 1 - k].I2));
  }
  return peak > 0.0 ? worst / peak : 0.0;
}

// ---------------------------------------------------------------------------
// Record
// ---------------------------------------------------------------------------

struct AnalysisRecord {
  double t = 0.0;
  std::vector<double> Psi;
  std::vector<SqueezingEllipse> ellipses;
  double S2_total = 0.0;
  std::vector<MiPoint> MI_scan;
  std::optional<RegimeLabel> regime;
};

inline AnalysisRecord analyze(const NetworkParams& p, const CovarianceMatrix& C,
                              std::optional<RegimeLabel> regime = std::nullopt) {
  AnalysisRecord rec;
  rec.t = C.t;
  rec.Psi = weighted_correlation(p, C);
  rec.ellipses = squeezing(p, C);
  rec.S2_total = renyi2_entropy(p, C.C);
  rec.MI_scan = mi_scan(p, C);
  rec.regime = std::move(regime);
  return rec;
}

}  // namespace chimera
