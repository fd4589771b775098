#pragma once

// Semiclassical mean field of the oscillator ring: a network of coupled
// Stuart-Landau oscillators
//
//   dα_l/dt = α_l (κ1 - 2κ2 |α_l|²) - i (V/2d) Σ_{m ∈ nbrs(l)} α_m .

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "chimera/core.hpp"
#include "chimera/rk4.hpp"

namespace chimera {

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

/// Gaussian phase profile on the limit cycle,
/// φ_l = θ_l / (√(2π) σ) · exp(-(l - μ)² / (2σ²)), with θ_l drawn uniformly
/// from (-theta_range, theta_range). By default every site draws its own θ_l,
/// giving random phases under a Gaussian envelope; `shared_theta` uses one
/// draw for the whole ring instead.
struct InitialConditionSpec {
  std::optional<double> r0;    // default: limit-cycle radius
  double sigma = 9.0;
  std::optional<double> mu;    // default: N / 2
  double theta_range = 24.0 * std::numbers::pi;
  std::uint64_t seed = 1;
  bool shared_theta = false;
  std::optional<double> theta; // fixes a shared θ instead of drawing it

  double radius(const NetworkParams& p) const { return r0.value_or(p.limit_cycle_radius()); }
  double center(const NetworkParams& p) const { return mu.value_or(0.5 * p.N); }
};

inline void validate_ic(const InitialConditionSpec& ic) {
  if (ic.r0 && !(*ic.r0 > 0.0)) throw RangeError("r0", "must be > 0");
  if (!(ic.sigma > 0.0)) throw RangeError("sigma", "must be > 0");
  if (!(ic.theta_range > 0.0)) throw RangeError("theta_range", "must be > 0");
}

/// The θ_l used by `initial_conditions`, one per site: consecutive draws of a
/// mt19937_64 seeded with `seed`, or the same value everywhere when θ is
/// shared or fixed.
inline std::vector<double> draw_thetas(const InitialConditionSpec& ic, int n) {
  if (ic.theta) return std::vector<double>(static_cast<std::size_t>(n), *ic.theta);
  std::mt19937_64 rng(ic.seed);
  std::uniform_real_distribution<double> uni(-ic.theta_range, ic.theta_range);
  if (ic.shared_theta) return std::vector<double>(static_cast<std::size_t>(n), uni(rng));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& th : out) th = uni(rng);
  return out;
}

inline MeanFieldState initial_conditions(const NetworkParams& p,
                                         const InitialConditionSpec& ic) {
  validate_params(p);
  validate_ic(ic);
  const auto thetas = draw_thetas(ic, p.N);
  const double r0 = ic.radius(p);
  const double mu = ic.center(p);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * ic.sigma);

  MeanFieldState s;
  s.t = 0.0;
  s.alphas.resize(p.N);
  for (int i = 0; i < p.N; ++i) {
    const double l = i + 1.0;
    const double envelope = norm * std::exp(-(l - mu) * (l - mu) / (2.0 * ic.sigma * ic.sigma));
    s.alphas(i) = std::polar(r0, thetas[static_cast<std::size_t>(i)] * envelope);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Equations of motion
// ---------------------------------------------------------------------------

class MeanFieldSystem {
public:
  explicit MeanFieldSystem(const NetworkParams& p) : ring_(p) {}
  explicit MeanFieldSystem(Ring ring) : ring_(std::move(ring)) {}

  const Ring& ring() const { return ring_; }
  const NetworkParams& params() const { return ring_.params(); }

  Eigen::VectorXcd operator()(double /*t*/, const Eigen::VectorXcd& a) const {
    const auto& p = params();
    const double c = p.coupling();
    Eigen::VectorXcd out(a.size());
    for (Eigen::Index l = 0; l < a.size(); ++l) {
      Complex sum(0.0, 0.0);
      for (const auto m : ring_.neighbors_of(static_cast<std::size_t>(l)))
        sum += a(static_cast<Eigen::Index>(m.index()));
      out(l) = a(l) * (p.kappa1 - 2.0 * p.kappa2 * std::norm(a(l))) - Complex(0.0, c) * sum;
    }
    return out;
  }

private:
  Ring ring_;
};

inline Eigen::VectorXcd mean_field_rhs(const NetworkParams& p, const MeanFieldState& s) {
  return MeanFieldSystem(p)(s.t, s.alphas);
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

struct MeanFieldTrajectory {
  std::vector<double> times;
  std::vector<MeanFieldState> states;
  NetworkParams params;

  bool empty() const { return states.empty(); }
  const MeanFieldState& front() const { return states.front(); }
  const MeanFieldState& back() const { return states.back(); }
};

/// Splits [t0, t1] into steps of `dt`; the final step is shortened when the
/// span is not an integer multiple of dt.
struct StepPlan {
  long long full_steps = 0;
  double last = 0.0;  // length of the trailing partial step, 0 if none

  static StepPlan make(double t0, double t1, double dt) {
    const double span = t1 - t0;
    StepPlan plan;
    const double ratio = span / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) {
      plan.full_steps = static_cast<long long>(rounded);
    } else {
      plan.full_steps = static_cast<long long>(std::floor(ratio));
      plan.last = span - static_cast<double>(plan.full_steps) * dt;
    }
    return plan;
  }
  long long total() const { return full_steps + (last > 0.0 ? 1 : 0); }
};

namespace detail {
inline void check_divergence(const Eigen::VectorXcd& a, double limit, double t) {
  for (Eigen::Index l = 0; l < a.size(); ++l) {
    const double r = std::abs(a(l));
    if (!std::isfinite(r) || r > limit)
      throw DivergenceError("mean field diverged at site " + std::to_string(l + 1) +
                            ", t = " + std::to_string(t));
  }
}
}  // namespace detail

/// Fixed-step RK4 from s0.t to t_end. Samples are kept every `sample_every`
/// steps; the initial and final states are always recorded.
inline MeanFieldTrajectory integrate(const MeanFieldSystem& sys, const MeanFieldState& s0,
                                     double t_end, double dt, long long sample_every = 1) {
  const auto& p = sys.params();
  if (!(dt > 0.0)) throw RangeError("dt", "must be > 0");
  if (!(t_end > s0.t)) throw RangeError("t_end", "must exceed the initial time");
  if (sample_every < 1) throw RangeError("sample_every", "must be >= 1");
  if (static_cast<int>(s0.size()) != p.N) throw RangeError("alphas", "length must equal N");

  const double limit = 1e3 * p.limit_cycle_radius();
  detail::check_divergence(s0.alphas, limit, s0.t);

  MeanFieldTrajectory traj;
  traj.params = p;
  traj.times.push_back(s0.t);
  traj.states.push_back(s0);

  const StepPlan plan = StepPlan::make(s0.t, t_end, dt);
  const long long total = plan.total();
  Eigen::VectorXcd a = s0.alphas;
  for (long long k = 0; k < total; ++k) {
    const double t = s0.t + static_cast<double>(k) * dt;
    const bool partial = k == plan.full_steps;
    a = rk4_step(sys, t, a, partial ? plan.last : dt);
    const bool last = k + 1 == total;
    const double t_next = last ? t_end : s0.t + static_cast<double>(k + 1) * dt;
    detail::check_divergence(a, limit, t_next);
    if (last || (k + 1) % sample_every == 0) {
      traj.times.push_back(t_next);
      traj.states.push_back(MeanFieldState{t_next, a});
    }
  }
  return traj;
}

inline MeanFieldTrajectory integrate(const NetworkParams& p, const MeanFieldState& s0,
                                     double t_end, double dt, long long sample_every = 1) {
  return integrate(MeanFieldSystem(p), s0, t_end, dt, sample_every);
}

/// Advances to t_end without keeping intermediate samples.
inline MeanFieldState advance(const MeanFieldSystem& sys, const MeanFieldState& s0,
                              double t_end, double dt) {
  if (t_end == s0.t) return s0;
  const auto plan = StepPlan::make(s0.t, t_end, dt);
  return integrate(sys, s0, t_end, dt, plan.total() + 1).back();
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

enum class Regime { Synchronized, Desynchronized, Chimera };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::Synchronized: return "Synchronized";
    case Regime::Desynchronized: return "Desynchronized";
    case Regime::Chimera: return "Chimera";
  }
  return "?";
}

struct ClassifierOptions {
  double window = 10.0;
  double z_threshold = 0.5;
  int w_min = 5;
};

struct RegimeLabel {
  Regime regime = Regime::Desynchronized;
  std::vector<bool> synchronized;      // per site
  std::vector<double> order_parameter; // time-averaged local Z_l
  int coherent_width = 0;              // longest contiguous synchronized run
  int coherent_start = 0;              // 1-based label of its first site, 0 if none

  /// Labels L such that sites L and L+1 (mod N) differ in the mask.
  std::vector<int> boundaries() const {
    std::vector<int> out;
    const auto n = synchronized.size();
    for (std::size_t i = 0; i < n; ++i)
      if (synchronized[i] != synchronized[(i + 1) % n]) out.push_back(static_cast<int>(i) + 1);
    return out;
  }
};

namespace detail {
/// Longest run of `value` on the ring; returns {length, 0-based start}.
inline std::pair<int, int> longest_circular_run(const std::vector<bool>& mask, bool value) {
  const int n = static_cast<int>(mask.size());
  if (std::all_of(mask.begin(), mask.end(), [&](bool b) { return b == value; })) return {n, 0};
  int best = 0, best_start = 0;
  // Start scanning just after a site that breaks the run so wraps are whole.
  int origin = 0;
  while (mask[static_cast<std::size_t>(origin)] == value) ++origin;
  int run = 0, start = 0;
  for (int k = 1; k <= n; ++k) {
    const int i = (origin + k) % n;
    if (mask[static_cast<std::size_t>(i)] == value) {
      if (run == 0) start = i;
      ++run;
      if (run > best) {
        best = run;
        best_start = start;
      }
    } else {
      run = 0;
    }
  }
  return {best, best_start};
}
}  // namespace detail

/// Local order parameter Z_l = |⟨e^{i(φ_m - φ_l)}⟩_{m ∈ nbrs(l)}|, averaged
/// over the samples in the trailing `window`. Sites with Z̄_l >= threshold
/// are locally synchronized. Chimera requires a contiguous run of at least
/// w_min sites of each kind; mixed masks without such runs fall back to the
/// majority label.
inline RegimeLabel classify(const MeanFieldTrajectory& traj, const ClassifierOptions& opt = {}) {
  if (traj.empty()) throw InsufficientDataError("empty trajectory");
  const double t_last = traj.times.back();
  if (traj.times.back() - traj.times.front() < opt.window * (1.0 - 1e-12))
    throw InsufficientDataError("trajectory spans " +
                                std::to_string(traj.times.back() - traj.times.front()) +
                                " < window " + std::to_string(opt.window));
  const Ring ring(traj.params);
  const auto n = ring.size();
  std::vector<double> zbar(n, 0.0);
  std::size_t count = 0;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    if (traj.times[k] < t_last - opt.window - 1e-9) continue;
    const auto& a = traj.states[k].alphas;
    Eigen::VectorXcd unit(a.size());
    for (Eigen::Index l = 0; l < a.size(); ++l) {
      const double r = std::abs(a(l));
      unit(l) = r > 0.0 ? a(l) / r : Complex(0.0, 0.0);
    }
    for (std::size_t l = 0; l < n; ++l) {
      const auto& nb = ring.neighbors_of(l);
      Complex sum(0.0, 0.0);
      for (const auto m : nb) sum += unit(static_cast<Eigen::Index>(m.index()));
      zbar[l] += std::abs(sum) / static_cast<double>(nb.size());
    }
    ++count;
  }
  if (count < 2) throw InsufficientDataError("fewer than two samples inside the window");

  RegimeLabel label;
  label.order_parameter.resize(n);
  label.synchronized.resize(n);
  std::size_t n_sync = 0;
  for (std::size_t l = 0; l < n; ++l) {
    label.order_parameter[l] = zbar[l] / static_cast<double>(count);
    label.synchronized[l] = label.order_parameter[l] >= opt.z_threshold;
    n_sync += label.synchronized[l] ? 1 : 0;
  }

  const auto [sync_run, sync_start] = detail::longest_circular_run(label.synchronized, true);
  label.coherent_width = n_sync == 0 ? 0 : sync_run;
  label.coherent_start = n_sync == 0 ? 0 : sync_start + 1;

  if (n_sync == n) {
    label.regime = Regime::Synchronized;
  } else if (n_sync == 0) {
    label.regime = Regime::Desynchronized;
  } else {
    const int desync_run = detail::longest_circular_run(label.synchronized, false).first;
    if (sync_run >= opt.w_min && desync_run >= opt.w_min)
      label.regime = Regime::Chimera;
    else
      label.regime = 2 * n_sync >= n ? Regime::Synchronized : Regime::Desynchronized;
  }
  return label;
}

// ---------------------------------------------------------------------------
// Space-time grids
// ---------------------------------------------------------------------------

struct SpaceTimeGrid {
  std::vector<double> times;
  Eigen::MatrixXd phi;  // N x T, wrapped to (-π, π]
  Eigen::MatrixXd r2;   // N x T
};

inline double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

inline SpaceTimeGrid spacetime_grid(const MeanFieldTrajectory& traj) {
  if (traj.empty()) throw InsufficientDataError("empty trajectory");
  const auto n = traj.front().alphas.size();
  const auto T = static_cast<Eigen::Index>(traj.states.size());
  SpaceTimeGrid g;
  g.times = traj.times;
  g.phi.resize(n, T);
  g.r2.resize(n, T);
  for (Eigen::Index k = 0; k < T; ++k) {
    const auto& a = traj.states[static_cast<std::size_t>(k)].alphas;
    for (Eigen::Index l = 0; l < n; ++l) {
      g.phi(l, k) = wrap_phase(std::arg(a(l)));
      g.r2(l, k) = std::norm(a(l));
    }
  }
  return g;
}

}  // namespace chimera
