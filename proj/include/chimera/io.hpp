#pragma once

// File formats: JSON for parameters, initial conditions and records; CSV with
// fixed column order and 17 significant digits for numeric payloads.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chimera/analysis.hpp"
#include "chimera/core.hpp"
#include "chimera/meanfield.hpp"

namespace chimera::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Shortest-stable formatting: 17 significant digits, "%.17g".
inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    row_strings(header);
  }

  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> v{cell(cells)...};
    row_strings(v);
  }

private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long long x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  std::ofstream out_;
};

inline std::vector<std::vector<std::string>> read_csv(const fs::path& path,
                                                      std::vector<std::string>* header = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      if (header) *header = cells;
      first = false;
      continue;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return json::parse(in);
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// {"N", "d", "V", "kappa2", "hbar"}; kappa1 is fixed at 1 in files.
inline json to_json(const NetworkParams& p) {
  return json{{"N", p.N}, {"d", p.d}, {"V", p.V}, {"kappa2", p.kappa2}, {"hbar", p.hbar}};
}

inline NetworkParams params_from_json(const json& j, NetworkParams p = {}) {
  if (!j.is_object()) throw RangeError("params", "expected a JSON object");
  if (j.contains("kappa1") && j.at("kappa1").get<double>() != 1.0)
    throw RangeError("kappa1", "fixed at 1 in parameter files");
  if (j.contains("N")) p.N = j.at("N").get<int>();
  if (j.contains("d")) p.d = j.at("d").get<int>();
  if (j.contains("V")) p.V = j.at("V").get<double>();
  if (j.contains("kappa2")) p.kappa2 = j.at("kappa2").get<double>();
  if (j.contains("hbar")) p.hbar = j.at("hbar").get<double>();
  p.kappa1 = 1.0;
  return validate_params(p);
}

inline json to_json(const InitialConditionSpec& ic) {
  json j{{"sigma", ic.sigma},
         {"theta_range", ic.theta_range},
         {"seed", ic.seed},
         {"shared_theta", ic.shared_theta}};
  if (ic.r0) j["r0"] = *ic.r0;
  if (ic.mu) j["mu"] = *ic.mu;
  if (ic.theta) j["theta"] = *ic.theta;
  return j;
}

inline InitialConditionSpec ic_from_json(const json& j) {
  InitialConditionSpec ic;
  if (!j.is_object()) throw RangeError("ic", "expected a JSON object");
  if (j.contains("r0")) ic.r0 = j.at("r0").get<double>();
  if (j.contains("sigma")) ic.sigma = j.at("sigma").get<double>();
  if (j.contains("mu")) ic.mu = j.at("mu").get<double>();
  if (j.contains("theta_range")) ic.theta_range = j.at("theta_range").get<double>();
  if (j.contains("seed")) ic.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("shared_theta")) ic.shared_theta = j.at("shared_theta").get<bool>();
  if (j.contains("theta")) ic.theta = j.at("theta").get<double>();
  validate_ic(ic);
  return ic;
}

// ---------------------------------------------------------------------------
// Initial-condition / state files
// ---------------------------------------------------------------------------

/// {"t", "alphas": [[re, im], ...], "spec", "seed", "thetas"}.
inline json state_to_json(const MeanFieldState& s) {
  json arr = json::array();
  for (Eigen::Index l = 0; l < s.alphas.size(); ++l)
    arr.push_back(json::array({s.alphas(l).real(), s.alphas(l).imag()}));
  return json{{"t", s.t}, {"alphas", arr}};
}

inline json ic_file_json(const NetworkParams& p, const InitialConditionSpec& ic,
                         const MeanFieldState& s) {
  json j = state_to_json(s);
  j["spec"] = to_json(ic);
  j["seed"] = ic.seed;
  j["thetas"] = draw_thetas(ic, p.N);
  j["params"] = to_json(p);
  return j;
}

inline MeanFieldState state_from_json(const json& j, int expected_n) {
  MeanFieldState s;
  s.t = j.value("t", 0.0);
  const auto& arr = j.at("alphas");
  if (!arr.is_array() || static_cast<int>(arr.size()) != expected_n)
    throw RangeError("alphas", "expected " + std::to_string(expected_n) + " [re, im] pairs");
  s.alphas.resize(expected_n);
  for (int l = 0; l < expected_n; ++l) {
    const auto& pair = arr.at(static_cast<std::size_t>(l));
    if (!pair.is_array() || pair.size() != 2) throw RangeError("alphas", "entries must be [re, im]");
    s.alphas(l) = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  if (!s.finite()) throw RangeError("alphas", "entries must be finite");
  return s;
}

// ---------------------------------------------------------------------------
// Space-time grids
// ---------------------------------------------------------------------------

/// Long format, one row per (t, l): `t,l,phi,r2`, l 1-based.
inline void write_spacetime_csv(const fs::path& path, const SpaceTimeGrid& g) {
  CsvWriter w(path, {"t", "l", "phi", "r2"});
  for (std::size_t k = 0; k < g.times.size(); ++k)
    for (Eigen::Index l = 0; l < g.phi.rows(); ++l)
      w.row(g.times[k], static_cast<int>(l + 1), g.phi(l, static_cast<Eigen::Index>(k)),
            g.r2(l, static_cast<Eigen::Index>(k)));
}

/// Single-quantity grid, `t,l,<name>`.
inline void write_grid_csv(const fs::path& path, const std::vector<double>& times,
                           const Eigen::MatrixXd& values, const std::string& name) {
  CsvWriter w(path, {"t", "l", name});
  for (std::size_t k = 0; k < times.size(); ++k)
    for (Eigen::Index l = 0; l < values.rows(); ++l)
      w.row(times[k], static_cast<int>(l + 1), values(l, static_cast<Eigen::Index>(k)));
}

// ---------------------------------------------------------------------------
// Covariance snapshots
// ---------------------------------------------------------------------------

/// Lower triangle, row-major: `site_i,quad_i,site_j,quad_j,C` with j <= i.
inline void write_covariance_csv(const fs::path& path, const CovarianceMatrix& C) {
  CsvWriter w(path, {"site_i", "quad_i", "site_j", "quad_j", "C"});
  const auto n = C.C.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      w.row(static_cast<int>(i / 2 + 1), std::string(i % 2 ? "p" : "q"),
            static_cast<int>(j / 2 + 1), std::string(j % 2 ? "p" : "q"), C.C(i, j));
}

inline Eigen::MatrixXd read_covariance_csv(const fs::path& path, int n_sites) {
  std::vector<std::string> header;
  const auto rows = read_csv(path, &header);
  const std::vector<std::string> expected{"site_i", "quad_i", "site_j", "quad_j", "C"};
  if (header != expected) throw RangeError("covariance_file", "unexpected header");
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(2 * n_sites, 2 * n_sites,
                                                std::numeric_limits<double>::quiet_NaN());
  auto index = [&](const std::string& site, const std::string& quad) {
    const int s = std::stoi(site);
    if (s < 1 || s > n_sites) throw RangeError("covariance_file", "site out of range");
    if (quad != "q" && quad != "p") throw RangeError("covariance_file", "quadrature must be q or p");
    return 2 * (s - 1) + (quad == "p" ? 1 : 0);
  };
  for (const auto& r : rows) {
    if (r.size() != 5) throw RangeError("covariance_file", "expected 5 columns");
    const int i = index(r[0], r[1]), j = index(r[2], r[3]);
    const double v = std::stod(r[4]);
    C(i, j) = v;
    C(j, i) = v;
  }
  if (!C.allFinite()) throw RangeError("covariance_file", "lower triangle incomplete");
  return C;
}

// ---------------------------------------------------------------------------
// Analysis outputs
// ---------------------------------------------------------------------------

inline void write_mi_scan_csv(const fs::path& path, const std::vector<MiPoint>& scan) {
  CsvWriter w(path, {"L", "I2"});
  for (const auto& m : scan) w.row(m.L, m.I2);
}

inline void write_ellipses_csv(const fs::path& path, const std::vector<SqueezingEllipse>& el) {
  CsvWriter w(path, {"l", "lambda_min", "lambda_max", "theta"});
  for (const auto& e : el) w.row(e.site.label(), e.lambda_min, e.lambda_max, e.theta);
}

inline void write_psi_csv(const fs::path& path, const std::vector<double>& psi) {
  CsvWriter w(path, {"l", "Psi"});
  for (std::size_t l = 0; l < psi.size(); ++l) w.row(static_cast<int>(l + 1), psi[l]);
}

inline json to_json(const RegimeLabel& r) {
  std::vector<int> mask;
  for (bool b : r.synchronized) mask.push_back(b ? 1 : 0);
  return json{{"regime", to_string(r.regime)},
              {"coherent_width", r.coherent_width},
              {"coherent_start", r.coherent_start},
              {"synchronized", mask},
              {"order_parameter", r.order_parameter},
              {"boundaries", r.boundaries()}};
}

inline json to_json(const AnalysisRecord& rec) {
  json ellipses = json::array();
  for (const auto& e : rec.ellipses)
    ellipses.push_back(json{{"l", e.site.label()},
                            {"lambda_min", e.lambda_min},
                            {"lambda_max", e.lambda_max},
                            {"theta", e.theta}});
  json scan = json::array();
  for (const auto& m : rec.MI_scan) scan.push_back(json{{"L", m.L}, {"I2", m.I2}});
  json j{{"t", rec.t},
         {"Psi", rec.Psi},
         {"ellipses", ellipses},
         {"S2_total", rec.S2_total},
         {"MI_scan", scan}};
  j["regime"] = rec.regime ? to_json(*rec.regime) : json(nullptr);
  return j;
}

}  // namespace chimera::io
