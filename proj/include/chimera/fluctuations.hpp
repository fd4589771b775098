#pragma once

// Gaussian quantum fluctuations about a mean-field trajectory.
//
// In the co-moving frame the fluctuation modes obey linear dynamics
//
//   dδα_l/dt = (κ1 - 4κ2|α_l|²) δα_l - 2κ2 α_l² δα_l* - i (V/2d) Σ_m δα_m
//
// plus gain/loss noise. In quadratures R = (q1, p1, ..., qN, pN) the Wigner
// function stays Gaussian and its covariance obeys the Lyapunov equation
//
//   dC/dt = A C + C Aᵀ + B,   B = diag(ħ(κ1 + 4κ2|α_l|²)).
//
// `propagate_covariance` integrates that equation jointly with the mean
// field. `moment_oracle` integrates the normally ordered second moments
// ⟨ã_l ã_m⟩, ⟨ã_l† ã_m⟩ obtained from the adjoint master equation instead,
// and only exists to cross-check the first route.

#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

#include "chimera/core.hpp"
#include "chimera/meanfield.hpp"
#include "chimera/rk4.hpp"

namespace chimera {

struct DriftDiffusion {
  double t = 0.0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

/// Drift and diffusion of the quadrature fluctuations at mean-field state `a`.
inline DriftDiffusion drift_diffusion(const Ring& ring, double t, const Eigen::VectorXcd& a) {
  const auto& p = ring.params();
  const auto n = static_cast<Eigen::Index>(ring.size());
  const double c = p.coupling();
  DriftDiffusion dd;
  dd.t = t;
  dd.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  dd.B = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const double r2 = std::norm(a(l));
    const double g = p.kappa1 - 4.0 * p.kappa2 * r2;
    const Complex s = -2.0 * p.kappa2 * a(l) * a(l);
    const auto q = 2 * l;
    dd.A(q, q) = g + s.real();
    dd.A(q, q + 1) = s.imag();
    dd.A(q + 1, q) = s.imag();
    dd.A(q + 1, q + 1) = g - s.real();
    for (const auto m : ring.neighbors_of(static_cast<std::size_t>(l))) {
      const auto qm = static_cast<Eigen::Index>(m.q_row());
      dd.A(q, qm + 1) += c;
      dd.A(q + 1, qm) -= c;
    }
    const double diff = p.hbar * (p.kappa1 + 4.0 * p.kappa2 * r2);
    dd.B(q, q) = diff;
    dd.B(q + 1, q + 1) = diff;
  }
  return dd;
}

inline DriftDiffusion drift_diffusion(const NetworkParams& p, const MeanFieldState& s) {
  return drift_diffusion(Ring(p), s.t, s.alphas);
}

/// (ħ/2)·I, the covariance of a product of coherent states.
inline CovarianceMatrix vacuum_covariance(const NetworkParams& p, double t = 0.0) {
  validate_params(p);
  return CovarianceMatrix{t, 0.5 * p.hbar * Eigen::MatrixXd::Identity(2 * p.N, 2 * p.N)};
}

inline Eigen::MatrixXd lyapunov_rhs(const DriftDiffusion& dd, const Eigen::MatrixXd& C) {
  Eigen::MatrixXd AC = dd.A * C;
  return AC + AC.transpose() + dd.B;
}

// ---------------------------------------------------------------------------
// Trajectories and options
// ---------------------------------------------------------------------------

struct PropagationOptions {
  bool check_physicality = true;
  double physicality_tolerance = 1e-9;  // allowed negative margin
};

struct CovarianceTrajectory {
  std::vector<double> times;
  std::vector<CovarianceMatrix> covs;
  std::vector<MeanFieldState> mean_field;  // jointly integrated, same grid
  std::vector<double> margins;             // physicality margin per sample

  double min_margin() const {
    return margins.empty() ? std::numeric_limits<double>::infinity()
                           : *std::min_element(margins.begin(), margins.end());
  }
  const CovarianceMatrix& back() const { return covs.back(); }
};

namespace detail {

inline double record_margin(const Eigen::MatrixXd& C, double hbar, double t,
                            const PropagationOptions& opt, std::vector<double>& margins) {
  if (!opt.check_physicality) return std::numeric_limits<double>::quiet_NaN();
  if (!C.allFinite()) throw PhysicalityError("covariance is not finite at t = " + std::to_string(t), -std::numeric_limits<double>::infinity());
  const double m = physicality_margin(C, hbar);
  if (m < -opt.physicality_tolerance)
    throw PhysicalityError("covariance violates the uncertainty principle at t = " +
                               std::to_string(t) + " (margin " + std::to_string(m) + ")",
                           m);
  margins.push_back(m);
  return m;
}

/// Number of dt steps covering `span`; dt must divide it.
inline long long steps_dividing(double span, double dt) {
  const double ratio = span / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw RangeError("dt", "step " + std::to_string(dt) +
                               " does not divide the segment spacing " + std::to_string(span));
  return static_cast<long long>(rounded);
}

struct JointCov {
  Eigen::VectorXcd a;
  Eigen::MatrixXd C;
};
inline JointCov operator+(const JointCov& x, const JointCov& y) { return {x.a + y.a, x.C + y.C}; }
inline JointCov operator*(double h, const JointCov& x) { return {h * x.a, h * x.C}; }

struct JointMoments {
  Eigen::VectorXcd a;
  Eigen::MatrixXcd M;  // ⟨ã_l ã_m⟩
  Eigen::MatrixXcd N;  // ⟨ã_l† ã_m⟩
};
inline JointMoments operator+(const JointMoments& x, const JointMoments& y) {
  return {x.a + y.a, x.M + y.M, x.N + y.N};
}
inline JointMoments operator*(double h, const JointMoments& x) {
  return {h * x.a, h * x.M, h * x.N};
}

inline void check_segment(const MeanFieldTrajectory& seg, const CovarianceMatrix& C0) {
  if (seg.states.size() < 2) throw InsufficientDataError("mean-field segment needs >= 2 samples");
  if (C0.C.rows() != 2 * seg.params.N || C0.C.cols() != 2 * seg.params.N)
    throw RangeError("C0", "covariance must be 2N x 2N");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lyapunov route
// ---------------------------------------------------------------------------

/// RK4 on dC/dt = A C + C Aᵀ + B for caller-supplied coefficients, sampled
/// every `sample_every` steps. Used directly with frozen coefficients.
inline CovarianceTrajectory propagate_lyapunov(
    const std::function<DriftDiffusion(double)>& coefficients, const CovarianceMatrix& C0,
    double t_end, double dt, double hbar, long long sample_every = 1,
    const PropagationOptions& opt = {}) {
  if (!(dt > 0.0)) throw RangeError("dt", "must be > 0");
  const long long steps = detail::steps_dividing(t_end - C0.t, dt);
  CovarianceTrajectory out;
  out.times.push_back(C0.t);
  out.covs.push_back(C0);
  detail::record_margin(C0.C, hbar, C0.t, opt, out.margins);
  Eigen::MatrixXd C = C0.C;
  auto f = [&](double t, const Eigen::MatrixXd& X) { return lyapunov_rhs(coefficients(t), X); };
  for (long long k = 0; k < steps; ++k) {
    C = rk4_step(f, C0.t + static_cast<double>(k) * dt, C, dt);
    symmetrize(C);
    if ((k + 1) % sample_every == 0 || k + 1 == steps) {
      const double t = k + 1 == steps ? t_end : C0.t + static_cast<double>(k + 1) * dt;
      detail::record_margin(C, hbar, t, opt, out.margins);
      out.times.push_back(t);
      out.covs.push_back(CovarianceMatrix{t, C});
    }
  }
  return out;
}

/// Propagates C0 along a mean-field segment. The mean field is re-integrated
/// from the segment's first state together with C in one RK4 state, so the
/// coefficients at half steps are exact. Output shares the segment's grid.
inline CovarianceTrajectory propagate_covariance(const NetworkParams& p,
                                                 const MeanFieldTrajectory& mf_segment,
                                                 const CovarianceMatrix& C0, double dt,
                                                 const PropagationOptions& opt = {}) {
  detail::check_segment(mf_segment, C0);
  if (!(dt > 0.0)) throw RangeError("dt", "must be > 0");
  const MeanFieldSystem sys(p);
  const Ring& ring = sys.ring();

  auto f = [&](double t, const detail::JointCov& y) {
    const auto dd = drift_diffusion(ring, t, y.a);
    return detail::JointCov{sys(t, y.a), lyapunov_rhs(dd, y.C)};
  };

  CovarianceTrajectory out;
  detail::JointCov y{mf_segment.front().alphas, C0.C};
  const double t0 = mf_segment.times.front();
  detail::record_margin(y.C, p.hbar, t0, opt, out.margins);
  out.times.push_back(t0);
  out.covs.push_back(CovarianceMatrix{t0, y.C});
  out.mean_field.push_back(MeanFieldState{t0, y.a});

  for (std::size_t k = 0; k + 1 < mf_segment.times.size(); ++k) {
    const double ta = mf_segment.times[k];
    const double tb = mf_segment.times[k + 1];
    const long long steps = detail::steps_dividing(tb - ta, dt);
    for (long long j = 0; j < steps; ++j) {
      y = rk4_step(f, ta + static_cast<double>(j) * dt, y, dt);
      symmetrize(y.C);
    }
    detail::record_margin(y.C, p.hbar, tb, opt, out.margins);
    out.times.push_back(tb);
    out.covs.push_back(CovarianceMatrix{tb, y.C});
    out.mean_field.push_back(MeanFieldState{tb, y.a});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Moment route (cross-validation oracle)
// ---------------------------------------------------------------------------

/// Quadrature covariance from normally ordered moments M = ⟨ã ãᵀ⟩, N = ⟨ã† ãᵀ⟩.
inline Eigen::MatrixXd covariance_from_moments(const Eigen::MatrixXcd& M,
                                               const Eigen::MatrixXcd& N, double hbar) {
  const auto n = M.rows();
  const Eigen::MatrixXcd Ns = N + 0.5 * Eigen::MatrixXcd::Identity(n, n);  // ½⟨{ã†_l, ã_m}⟩
  const Eigen::MatrixXcd plus = M + Ns;
  const Eigen::MatrixXcd minus = Ns - M;
  Eigen::MatrixXd C(2 * n, 2 * n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index m = 0; m < n; ++m) {
      C(2 * l, 2 * m) = hbar * plus(l, m).real();
      C(2 * l + 1, 2 * m + 1) = hbar * minus(l, m).real();
      C(2 * l, 2 * m + 1) = hbar * plus(l, m).imag();
      C(2 * l + 1, 2 * m) = hbar * plus(m, l).imag();
    }
  return C;
}

/// Inverse of `covariance_from_moments`; returns {M, N}.
inline std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> moments_from_covariance(
    const Eigen::MatrixXd& C, double hbar) {
  const auto n = C.rows() / 2;
  Eigen::MatrixXcd M(n, n), Ns(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (Eigen::Index m = 0; m < n; ++m) {
      const double qq = C(2 * l, 2 * m), pp = C(2 * l + 1, 2 * m + 1);
      const double x_lm = C(2 * l, 2 * m + 1), x_ml = C(2 * m, 2 * l + 1);
      M(l, m) = Complex(0.5 * (qq - pp), 0.5 * (x_lm + x_ml)) / hbar;
      Ns(l, m) = Complex(0.5 * (qq + pp), 0.5 * (x_lm - x_ml)) / hbar;
    }
  return {M, Ns - 0.5 * Eigen::MatrixXcd::Identity(n, n)};
}

inline CovarianceTrajectory moment_oracle(const NetworkParams& p,
                                          const MeanFieldTrajectory& mf_segment,
                                          const CovarianceMatrix& C0, double dt,
                                          const PropagationOptions& opt = {}) {
  detail::check_segment(mf_segment, C0);
  if (!(dt > 0.0)) throw RangeError("dt", "must be > 0");
  const MeanFieldSystem sys(p);
  const Ring& ring = sys.ring();
  const auto n = static_cast<Eigen::Index>(ring.size());

  // Coupling K_lm = (V/2d) on neighbour pairs.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index l = 0; l < n; ++l)
    for (const auto m : ring.neighbors_of(static_cast<std::size_t>(l)))
      K(l, static_cast<Eigen::Index>(m.index())) = p.coupling();
  const Eigen::MatrixXcd gain = 2.0 * p.kappa1 * Eigen::MatrixXcd::Identity(n, n);

  // Heisenberg-Langevin drift: dã/dt = G ã + S ã†, G = diag(g) - iK, S = diag(s).
  // Products follow by the product rule; the gain dissipator adds 2κ1 δ_lm
  // to d⟨ã†_l ã_m⟩/dt, the loss dissipator adds no normally ordered noise,
  // and [ã_l, ã†_m] = δ_lm contributes S to d⟨ã ãᵀ⟩/dt.
  auto f = [&](double t, const detail::JointMoments& y) {
    Eigen::MatrixXcd G = Complex(0.0, -1.0) * K.cast<Complex>();
    Eigen::VectorXcd s(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      G(l, l) += p.kappa1 - 4.0 * p.kappa2 * std::norm(y.a(l));
      s(l) = -2.0 * p.kappa2 * y.a(l) * y.a(l);
    }
    const auto S = s.asDiagonal();
    const Eigen::MatrixXcd S_conj = s.conjugate().asDiagonal();
    Eigen::MatrixXcd dM = G * y.M + y.M * G.transpose();
    dM += S * y.N + y.N.transpose() * S;
    dM += s.asDiagonal().toDenseMatrix();
    Eigen::MatrixXcd dN = G.conjugate() * y.N + y.N * G.transpose();
    dN += S_conj * y.M + y.M.conjugate() * S;
    dN += gain;
    return detail::JointMoments{sys(t, y.a), dM, dN};
  };

  auto [M0, N0] = moments_from_covariance(C0.C, p.hbar);
  detail::JointMoments y{mf_segment.front().alphas, M0, N0};

  CovarianceTrajectory out;
  const double t0 = mf_segment.times.front();
  auto emit = [&](double t) {
    Eigen::MatrixXd C = covariance_from_moments(y.M, y.N, p.hbar);
    symmetrize(C);
    detail::record_margin(C, p.hbar, t, opt, out.margins);
    out.times.push_back(t);
    out.covs.push_back(CovarianceMatrix{t, std::move(C)});
    out.mean_field.push_back(MeanFieldState{t, y.a});
  };
  emit(t0);
  for (std::size_t k = 0; k + 1 < mf_segment.times.size(); ++k) {
    const double ta = mf_segment.times[k];
    const double tb = mf_segment.times[k + 1];
    const long long steps = detail::steps_dividing(tb - ta, dt);
    for (long long j = 0; j < steps; ++j) y = rk4_step(f, ta + static_cast<double>(j) * dt, y, dt);
    emit(tb);
  }
  return out;
}

}  // namespace chimera
