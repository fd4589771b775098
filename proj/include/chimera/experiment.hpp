#pragma once

// Experiment runner: configuration, the figure pipelines, manifests and seed
// sweeps. Every pipeline writes plain CSV/JSON files into its output
// directory and a manifest.json listing them.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chimera/analysis.hpp"
#include "chimera/core.hpp"
#include "chimera/fluctuations.hpp"
#include "chimera/io.hpp"
#include "chimera/meanfield.hpp"
#include "chimera/version.hpp"

namespace chimera {

class ConfigError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "ConfigError"; }
};

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kPartialFailure = 4 };

/// Maps an exception to the CLI exit status: configuration and parameter
/// errors are 2, numerical failures 3.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e))
    return kConfigError;
  return kNumericalError;
}

inline nlohmann::json error_json(const std::exception& e) {
  std::string kind = "Error";
  if (const auto* ce = dynamic_cast<const Error*>(&e)) kind = ce->kind();
  else if (dynamic_cast<const nlohmann::json::exception*>(&e)) kind = "ConfigError";
  nlohmann::json j{{"error", kind}, {"message", e.what()}, {"exit_code", exit_code_for(e)}};
  if (const auto* re = dynamic_cast<const RangeError*>(&e)) j["field"] = re->field();
  return j;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "meanfield",      "fluctuations",   "analyze",        "scan-mi",
      "reproduce-fig1", "reproduce-fig2", "reproduce-fig3", "reproduce-fig4"};
  return names;
}

/// One mean-field regime of the figure pipelines: coupling and snapshot time.
struct RegimeSpec {
  std::string name;
  double V = 1.2;
  double t0 = 3000.5;
};

inline std::vector<RegimeSpec> default_regimes() {
  return {{"chimera", 1.2, 3000.5}, {"synchronized", 1.6, 25.5}, {"desynchronized", 0.8, 8000.5}};
}

struct ExperimentConfig {
  std::string experiment;
  NetworkParams params;
  InitialConditionSpec ic;
  std::optional<std::filesystem::path> ic_file;
  std::optional<std::filesystem::path> covariance_file;  // analyze only
  double t0 = 3000.0;
  double delta_t = 0.5;
  double dt_mf = 1e-2;
  double dt_cov = 1e-3;
  double cov_sample_dt = 1e-2;
  double grid_dt = 1.0;
  int L = 20;
  int mi_anchor = 1;
  ClassifierOptions classifier{10.0, 0.5, 5};
  std::vector<RegimeSpec> regimes = default_regimes();
  std::filesystem::path outputs = "out";
  int threads = 0;
  nlohmann::json source;  // config as read, echoed into manifests
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"experiment", c.experiment},
                   {"params", io::to_json(c.params)},
                   {"t0", c.t0},
                   {"delta_t", c.delta_t},
                   {"dt_mf", c.dt_mf},
                   {"dt_cov", c.dt_cov},
                   {"cov_sample_dt", c.cov_sample_dt},
                   {"grid_dt", c.grid_dt},
                   {"L", c.L},
                   {"mi_anchor", c.mi_anchor},
                   {"classifier",
                    {{"window", c.classifier.window},
                     {"z_threshold", c.classifier.z_threshold},
                     {"w_min", c.classifier.w_min}}},
                   {"outputs", c.outputs.string()}};
  if (c.ic_file) j["ic_file"] = c.ic_file->string();
  else j["ic"] = io::to_json(c.ic);
  if (c.covariance_file) j["covariance_file"] = c.covariance_file->string();
  nlohmann::json regimes = nlohmann::json::array();
  for (const auto& r : c.regimes) regimes.push_back({{"name", r.name}, {"V", r.V}, {"t0", r.t0}});
  j["regimes"] = regimes;
  return j;
}

/// Parses a configuration object. Relative input paths resolve against
/// `base_dir` (the config file's directory).
inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {}) {
  if (!j.is_object() || j.empty()) throw ConfigError("configuration is empty");
  static const std::vector<std::string> known{
      "experiment", "params",   "ic",      "ic_file", "covariance_file", "t0",
      "delta_t",    "dt_mf",    "dt_cov",  "cov_sample_dt", "grid_dt",   "L",
      "mi_anchor",  "classifier", "regimes", "outputs", "threads"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown configuration key '" + key + "'");

  ExperimentConfig c;
  c.source = j;
  c.experiment = j.value("experiment", std::string{});
  if (j.contains("params")) c.params = io::params_from_json(j.at("params"));
  else validate_params(c.params);
  if (j.contains("ic")) c.ic = io::ic_from_json(j.at("ic"));
  auto resolve = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  if (j.contains("ic_file")) {
    c.ic_file = resolve(j.at("ic_file").get<std::string>());
    if (!std::filesystem::exists(*c.ic_file))
      throw ConfigError("ic_file not found: " + c.ic_file->string());
  }
  if (j.contains("covariance_file")) {
    c.covariance_file = resolve(j.at("covariance_file").get<std::string>());
    if (!std::filesystem::exists(*c.covariance_file))
      throw ConfigError("covariance_file not found: " + c.covariance_file->string());
  }
  c.t0 = j.value("t0", c.t0);
  c.delta_t = j.value("delta_t", c.delta_t);
  c.dt_mf = j.value("dt_mf", c.dt_mf);
  c.dt_cov = j.value("dt_cov", c.dt_cov);
  c.cov_sample_dt = j.value("cov_sample_dt", c.cov_sample_dt);
  c.grid_dt = j.value("grid_dt", c.grid_dt);
  c.L = j.value("L", c.L);
  c.mi_anchor = j.value("mi_anchor", c.mi_anchor);
  c.threads = j.value("threads", c.threads);
  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    c.classifier.window = k.value("window", c.classifier.window);
    c.classifier.z_threshold = k.value("z_threshold", c.classifier.z_threshold);
    c.classifier.w_min = k.value("w_min", c.classifier.w_min);
  }
  if (j.contains("regimes")) {
    c.regimes.clear();
    for (const auto& r : j.at("regimes"))
      c.regimes.push_back({r.at("name").get<std::string>(), r.at("V").get<double>(),
                           r.at("t0").get<double>()});
    if (c.regimes.empty()) throw ConfigError("regimes must not be empty");
  }
  if (j.contains("outputs")) c.outputs = j.at("outputs").get<std::string>();

  if (!(c.delta_t > 0.0)) throw ConfigError("delta_t must be > 0");
  if (!(c.t0 >= 0.0)) throw ConfigError("t0 must be >= 0");
  if (!(c.dt_mf > 0.0) || !(c.dt_cov > 0.0) || !(c.cov_sample_dt > 0.0) || !(c.grid_dt > 0.0))
    throw ConfigError("step sizes must be > 0");
  if (c.L < 1 || c.L > c.params.N - 1) throw ConfigError("L must satisfy 1 <= L <= N-1");
  if (!(c.classifier.window > 0.0) || c.classifier.w_min < 1)
    throw ConfigError("classifier window and w_min must be positive");
  for (const auto& r : c.regimes)
    if (!(r.t0 >= 0.0) || !(r.V >= 0.0)) throw ConfigError("regime " + r.name + " is invalid");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config not found: " + path.string());
  nlohmann::json j;
  try {
    j = io::read_json(path);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Pipeline building blocks
// ---------------------------------------------------------------------------

struct MeanFieldRun {
  MeanFieldState final;
  MeanFieldTrajectory grid;           // samples every grid_dt
  std::optional<RegimeLabel> regime;  // absent when the run is shorter than the window
};

inline long long steps_per(double spacing, double dt) {
  return std::max(1LL, static_cast<long long>(std::llround(spacing / dt)));
}

/// Integrates to t_end keeping a coarse grid and classifying the trailing
/// window, which is sampled at every step.
inline MeanFieldRun run_mean_field(const NetworkParams& p, const MeanFieldState& s0, double t_end,
                                   double dt, double grid_dt, const ClassifierOptions& opt) {
  const MeanFieldSystem sys(p);
  MeanFieldRun run;
  run.grid.params = p;
  if (t_end <= s0.t) {
    run.final = s0;
    run.grid.times.push_back(s0.t);
    run.grid.states.push_back(s0);
    return run;
  }
  const long long grid_every = steps_per(grid_dt, dt);
  const auto total_steps = StepPlan::make(s0.t, t_end, dt).full_steps;
  const long long window_steps = steps_per(opt.window, dt);
  if (total_steps < window_steps) {
    run.grid = integrate(sys, s0, t_end, dt, grid_every);
    run.final = run.grid.back();
    return run;
  }
  const long long head_steps = total_steps - window_steps;
  MeanFieldState split = s0;
  if (head_steps > 0) {
    run.grid = integrate(sys, s0, s0.t + static_cast<double>(head_steps) * dt, dt, grid_every);
    split = run.grid.back();
    // A trailing sample off the grid spacing is dropped; the window covers it.
    if (head_steps % grid_every != 0) {
      run.grid.times.pop_back();
      run.grid.states.pop_back();
    }
  } else {
    run.grid.times.push_back(s0.t);
    run.grid.states.push_back(s0);
  }
  const auto window = integrate(sys, split, t_end, dt, 1);
  for (std::size_t k = 1; k < window.states.size(); ++k) {
    const long long step = head_steps + static_cast<long long>(k);
    if (step % grid_every == 0 || k + 1 == window.states.size()) {
      run.grid.times.push_back(window.times[k]);
      run.grid.states.push_back(window.states[k]);
    }
  }
  run.final = window.back();
  run.regime = classify(window, opt);
  return run;
}

struct FluctuationRun {
  MeanFieldRun mean_field;
  CovarianceTrajectory cov;
};

/// Mean field to t0, then the covariance from the vacuum at t0 over delta_t.
inline FluctuationRun run_fluctuations(const NetworkParams& p, const MeanFieldState& s0,
                                       const ExperimentConfig& c, double t0) {
  FluctuationRun run;
  run.mean_field = run_mean_field(p, s0, t0, c.dt_mf, c.grid_dt, c.classifier);
  const MeanFieldSystem sys(p);
  const auto& start = run.mean_field.final;
  const long long every = steps_per(c.cov_sample_dt, c.dt_cov);
  const auto segment = integrate(sys, start, start.t + c.delta_t, c.dt_cov, every);
  run.cov = propagate_covariance(p, segment, vacuum_covariance(p, start.t), c.dt_cov);
  return run;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Per-run digest used by seed sweeps.
struct RunSummary {
  std::string regime;
  int coherent_width = -1;
  std::optional<double> I2;
};

class Manifest {
public:
  Manifest(const ExperimentConfig& c, std::filesystem::path dir)
      : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
    body_["experiment"] = c.experiment;
    body_["code_version"] = kVersion;
    body_["config"] = to_json(c);
    body_["seed"] = c.ic_file ? nlohmann::json(nullptr) : nlohmann::json(c.ic.seed);
    body_["outputs"] = nlohmann::json::array();
    body_["physicality"] = {{"tolerance", 1e-9}, {"runs", nlohmann::json::object()}};
    body_["regimes"] = nlohmann::json::object();
    body_["beyond_validated_horizon"] = c.delta_t > 0.5 + 1e-12;
  }

  std::filesystem::path file(const std::string& name) {
    body_["outputs"].push_back(name);
    return dir_ / name;
  }
  void margin(const std::string& run, double m) {
    body_["physicality"]["runs"][run] = m;
    min_margin_ = std::min(min_margin_, m);
  }
  void regime(const std::string& run, const std::optional<RegimeLabel>& r) {
    body_["regimes"][run] = r ? io::to_json(*r) : nlohmann::json(nullptr);
  }
  nlohmann::json& body() { return body_; }

  nlohmann::json finish() {
    body_["physicality"]["min_margin"] =
        std::isfinite(min_margin_) ? nlohmann::json(min_margin_) : nlohmann::json(nullptr);
    body_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    io::write_json(dir_ / "manifest.json", body_);
    return body_;
  }

private:
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json body_;
  double min_margin_ = std::numeric_limits<double>::infinity();
};

struct RunResult {
  nlohmann::json manifest;
  RunSummary summary;
};

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

namespace detail {

inline MeanFieldState load_or_generate_ic(const ExperimentConfig& c, const NetworkParams& p,
                                          Manifest& m) {
  if (c.ic_file) {
    const auto j = io::read_json(*c.ic_file);
    return io::state_from_json(j, p.N);
  }
  const auto s0 = initial_conditions(p, c.ic);
  io::write_json(m.file("ic.json"), io::ic_file_json(p, c.ic, s0));
  return s0;
}

inline NetworkParams with_V(NetworkParams p, double V) {
  p.V = V;
  return validate_params(p);
}

inline void write_covariance_snapshot(Manifest& m, const std::string& stem,
                                      const ExperimentConfig& c, const NetworkParams& p,
                                      const CovarianceMatrix& C, double t_i) {
  io::write_covariance_csv(m.file(stem + ".csv"), C);
  io::write_json(m.file(stem + ".json"), {{"params", io::to_json(p)},
                                          {"t_i", t_i},
                                          {"t", C.t},
                                          {"delta_t", C.t - t_i},
                                          {"dt", c.dt_cov}});
}

inline void write_mi_vs_t(const std::filesystem::path& path, const std::vector<std::string>& names,
                          const std::vector<const CovarianceTrajectory*>& runs,
                          const std::vector<NetworkParams>& params, const Partition& part) {
  std::vector<std::string> header{"t"};
  for (const auto& n : names) header.push_back("I2_" + n);
  io::CsvWriter w(path, header);
  const auto samples = runs.front()->times.size();
  for (std::size_t k = 0; k < samples; ++k) {
    std::vector<std::string> row{io::fmt(runs.front()->times[k] - runs.front()->times.front())};
    for (std::size_t r = 0; r < runs.size(); ++r)
      row.push_back(io::fmt(mutual_information(params[r], runs[r]->covs[k], part)));
    w.row_strings(row);
  }
}

inline RunSummary summarize(const std::optional<RegimeLabel>& r, std::optional<double> I2) {
  RunSummary s;
  s.regime = r ? to_string(r->regime) : "unclassified";
  s.coherent_width = r ? r->coherent_width : -1;
  s.I2 = I2;
  return s;
}

}  // namespace detail

inline RunResult run_meanfield_like(const ExperimentConfig& c, const std::filesystem::path& dir,
                                    bool fig1) {
  Manifest m(c, dir);
  const auto& p = c.params;
  const auto s0 = detail::load_or_generate_ic(c, p, m);
  const auto run = run_mean_field(p, s0, c.t0, c.dt_mf, c.grid_dt, c.classifier);
  const auto grid = spacetime_grid(run.grid);
  if (fig1) {
    io::write_grid_csv(m.file("fig1_phi.csv"), grid.times, grid.phi, "phi");
    io::write_grid_csv(m.file("fig1_r2.csv"), grid.times, grid.r2, "r2");
  } else {
    io::write_spacetime_csv(m.file("spacetime.csv"), grid);
    io::write_json(m.file("final_state.json"), io::state_to_json(run.final));
  }
  m.regime("meanfield", run.regime);
  return {m.finish(), detail::summarize(run.regime, std::nullopt)};
}

/// fluctuations / analyze / scan-mi share one mean-field + covariance run.
inline RunResult run_fluctuation_like(const ExperimentConfig& c, const std::filesystem::path& dir) {
  Manifest m(c, dir);
  const auto& p = c.params;
  const Partition part{c.L, c.mi_anchor};

  if (c.experiment == "analyze" && c.covariance_file) {
    const CovarianceMatrix C{0.0, io::read_covariance_csv(*c.covariance_file, p.N)};
    const double margin = physicality_margin(C.C, p.hbar);
    m.margin("input", margin);
    if (margin < -1e-9) throw PhysicalityError("input covariance is unphysical", margin);
    const auto rec = analyze(p, C);
    io::write_json(m.file("analysis.json"), io::to_json(rec));
    io::write_mi_scan_csv(m.file("mi_scan.csv"), mi_scan(p, C, c.mi_anchor));
    io::write_ellipses_csv(m.file("ellipses.csv"), rec.ellipses);
    io::write_psi_csv(m.file("psi.csv"), rec.Psi);
    return {m.finish(), detail::summarize(std::nullopt, mutual_information(p, C, part))};
  }

  const auto s0 = detail::load_or_generate_ic(c, p, m);
  const auto run = run_fluctuations(p, s0, c, c.t0);
  const auto& C = run.cov.back();
  m.margin("fluctuations", run.cov.min_margin());
  m.regime("meanfield", run.mean_field.regime);
  io::write_json(m.file("fluct_ic.json"), io::state_to_json(run.mean_field.final));
  detail::write_covariance_snapshot(m, "covariance", c, p, C, run.cov.times.front());
  detail::write_mi_vs_t(m.file("mi_vs_t.csv"), {"L" + std::to_string(c.L)}, {&run.cov}, {p}, part);

  if (c.experiment == "analyze") {
    const auto rec = analyze(p, C, run.mean_field.regime);
    io::write_json(m.file("analysis.json"), io::to_json(rec));
    io::write_ellipses_csv(m.file("ellipses.csv"), rec.ellipses);
    io::write_psi_csv(m.file("psi.csv"), rec.Psi);
  }
  if (c.experiment == "analyze" || c.experiment == "scan-mi")
    io::write_mi_scan_csv(m.file("mi_scan.csv"), mi_scan(p, C, c.mi_anchor));
  return {m.finish(), detail::summarize(run.mean_field.regime, mutual_information(p, C, part))};
}

inline RunResult run_fig2(const ExperimentConfig& c, const std::filesystem::path& dir) {
  Manifest m(c, dir);
  const auto& p = c.params;
  const auto s0 = detail::load_or_generate_ic(c, p, m);
  const auto run = run_fluctuations(p, s0, c, c.t0);
  m.margin("fig2", run.cov.min_margin());
  m.regime("fig2", run.mean_field.regime);

  const auto& Ci = run.cov.covs.front();
  const auto& Cf = run.cov.back();
  {
    io::CsvWriter w(m.file("fig2_initial.csv"),
                    {"l", "re", "im", "r", "phi", "husimi_qq", "husimi_qp", "husimi_pp"});
    const auto& a = run.mean_field.final.alphas;
    for (int l = 0; l < p.N; ++l) {
      const auto h = husimi_marginal(p, Ci, RingIndex(static_cast<std::size_t>(l)));
      w.row(l + 1, a(l).real(), a(l).imag(), std::abs(a(l)), wrap_phase(std::arg(a(l))), h(0, 0),
            h(0, 1), h(1, 1));
    }
  }
  {
    io::CsvWriter w(m.file("fig2_squeezing.csv"),
                    {"l", "lambda_min", "lambda_max", "theta", "arrow_angle", "husimi_qq",
                     "husimi_qp", "husimi_pp"});
    for (const auto& e : squeezing(p, Cf)) {
      const auto h = husimi_marginal(p, Cf, e.site);
      w.row(e.site.label(), e.lambda_min, e.lambda_max, e.theta, e.arrow_angle(), h(0, 0),
            h(0, 1), h(1, 1));
    }
  }
  detail::write_covariance_snapshot(m, "fig2_covariance", c, p, Cf, Ci.t);
  return {m.finish(), detail::summarize(run.mean_field.regime,
                                        mutual_information(p, Cf, Partition{c.L, c.mi_anchor}))};
}

/// fig3 and fig4 run every configured regime from the same initial state.
inline RunResult run_regimes(const ExperimentConfig& c, const std::filesystem::path& dir,
                             bool fig4) {
  Manifest m(c, dir);
  const auto s0 = detail::load_or_generate_ic(c, c.params, m);
  const Partition part{c.L, c.mi_anchor};

  std::vector<FluctuationRun> runs;
  std::vector<NetworkParams> params;
  std::vector<std::string> names;
  for (const auto& r : c.regimes) {
    params.push_back(detail::with_V(c.params, r.V));
    runs.push_back(run_fluctuations(params.back(), s0, c, r.t0));
    names.push_back(r.name);
    m.margin(r.name, runs.back().cov.min_margin());
    m.regime(r.name, runs.back().mean_field.regime);
  }

  if (!fig4) {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& p = params[k];
      const auto& run = runs[k];
      const auto& a = run.mean_field.final.alphas;
      io::CsvWriter phase(m.file("fig3_" + names[k] + "_phase.csv"), {"l", "phi", "r2"});
      for (int l = 0; l < p.N; ++l)
        phase.row(l + 1, wrap_phase(std::arg(a(l))), std::norm(a(l)));
      detail::write_covariance_snapshot(m, "fig3_" + names[k] + "_cov", c, p, run.cov.back(),
                                        run.cov.times.front());
      io::write_psi_csv(m.file("fig3_" + names[k] + "_psi.csv"),
                        weighted_correlation(p, run.cov.back()));
    }
  } else {
    std::vector<std::string> header{"L"};
    std::vector<std::vector<MiPoint>> scans;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      header.push_back("I2_" + names[k]);
      scans.push_back(mi_scan(params[k], runs[k].cov.back(), c.mi_anchor));
    }
    io::CsvWriter w(m.file("fig4a_mi_scan.csv"), header);
    for (std::size_t i = 0; i < scans.front().size(); ++i) {
      std::vector<std::string> row{std::to_string(scans.front()[i].L)};
      for (const auto& s : scans) row.push_back(io::fmt(s[i].I2));
      w.row_strings(row);
    }
    std::vector<const CovarianceTrajectory*> covs;
    for (const auto& r : runs) covs.push_back(&r.cov);
    detail::write_mi_vs_t(m.file("fig4b_mi_vs_t.csv"), names, covs, params, part);
  }
  return {m.finish(), detail::summarize(runs.front().mean_field.regime,
                                        mutual_information(params.front(),
                                                           runs.front().cov.back(), part))};
}

/// Runs one experiment into `dir` (created if needed). Throws on failure.
inline RunResult run(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end())
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (c.covariance_file && c.experiment != "analyze")
    throw ConfigError("covariance_file is only accepted by analyze");
  std::filesystem::create_directories(dir);
  if (c.experiment == "meanfield") return run_meanfield_like(c, dir, false);
  if (c.experiment == "reproduce-fig1") return run_meanfield_like(c, dir, true);
  if (c.experiment == "reproduce-fig2") return run_fig2(c, dir);
  if (c.experiment == "reproduce-fig3") return run_regimes(c, dir, false);
  if (c.experiment == "reproduce-fig4") return run_regimes(c, dir, true);
  return run_fluctuation_like(c, dir);
}

inline RunResult run(const ExperimentConfig& c) { return run(c, c.outputs); }

// ---------------------------------------------------------------------------
// Seed sweeps
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile of sorted data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SweepResult {
  nlohmann::json manifest;
  std::vector<std::uint64_t> failed;
  int exit_code = kOk;
};

/// Runs the configured experiment once per seed, each in `<out>/seed_<k>`,
/// then writes sweep_summary.csv (per seed) and sweep_stats.csv (quartiles).
inline SweepResult seed_sweep(const ExperimentConfig& base, const std::vector<std::uint64_t>& seeds,
                              const std::filesystem::path& dir) {
  if (seeds.empty()) throw ConfigError("seed sweep needs at least one seed");
  if (base.ic_file) throw ConfigError("ic_file cannot be combined with a seed sweep");
  std::filesystem::create_directories(dir);

  struct Slot {
    std::optional<RunSummary> summary;
    nlohmann::json error;
  };
  std::vector<Slot> slots(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      ExperimentConfig c = base;
      c.ic.seed = seeds[k];
      try {
        slots[k].summary = run(c, dir / ("seed_" + std::to_string(seeds[k]))).summary;
      } catch (const std::exception& e) {
        slots[k].error = error_json(e);
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto n_threads = std::min<std::size_t>(base.threads > 0 ? base.threads : hw, seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  SweepResult result;
  nlohmann::json manifest{{"experiment", base.experiment},
                          {"code_version", kVersion},
                          {"config", to_json(base)},
                          {"seeds", seeds},
                          {"outputs", {"sweep_summary.csv", "sweep_stats.csv"}}};
  nlohmann::json children = nlohmann::json::array();
  std::vector<double> widths, mis;
  {
    io::CsvWriter w(dir / "sweep_summary.csv", {"seed", "status", "regime", "coherent_width", "I2"});
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const auto& s = slots[k];
      const auto seed = std::to_string(seeds[k]);
      if (!s.summary) {
        result.failed.push_back(seeds[k]);
        w.row_strings({seed, "failed", s.error.value("error", "Error"), "", ""});
        continue;
      }
      children.push_back("seed_" + seed + "/manifest.json");
      widths.push_back(s.summary->coherent_width);
      if (s.summary->I2) mis.push_back(*s.summary->I2);
      w.row_strings({seed, "ok", s.summary->regime, std::to_string(s.summary->coherent_width),
                     s.summary->I2 ? io::fmt(*s.summary->I2) : ""});
    }
  }
  {
    io::CsvWriter w(dir / "sweep_stats.csv", {"statistic", "coherent_width", "I2"});
    for (const auto& [name, q] : std::vector<std::pair<std::string, double>>{
             {"q1", 0.25}, {"median", 0.5}, {"q3", 0.75}})
      w.row_strings({name, widths.empty() ? "" : io::fmt(quantile(widths, q)),
                     mis.empty() ? "" : io::fmt(quantile(mis, q))});
  }
  manifest["runs"] = children;
  manifest["failed_seeds"] = result.failed;
  nlohmann::json errors = nlohmann::json::object();
  for (std::size_t k = 0; k < seeds.size(); ++k)
    if (!slots[k].summary) errors[std::to_string(seeds[k])] = slots[k].error;
  manifest["errors"] = errors;
  io::write_json(dir / "sweep_manifest.json", manifest);
  result.manifest = manifest;
  result.exit_code = result.failed.empty() ? kOk : kPartialFailure;
  return result;
}

}  // namespace chimera
