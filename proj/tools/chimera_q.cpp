// chimera-q <experiment> --config <path> [--seed k] [--seeds a,b,c] [--out dir]
//
// Exit status: 0 ok, 2 configuration or usage error, 3 numerical error,
// 4 partial sweep failure. Errors are reported as one JSON object on stderr.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "chimera/experiment.hpp"

namespace {

int fail(const std::exception& e) {
  std::cerr << chimera::error_json(e).dump() << '\n';
  return chimera::exit_code_for(e);
}

int usage_error(const std::string& message) {
  std::cerr << nlohmann::json{{"error", "UsageError"}, {"message", message},
                              {"exit_code", chimera::kConfigError}}
                   .dump()
            << '\n';
  return chimera::kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum chimera network experiments", "chimera-q"};
  std::string experiment, config_path, out;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  app.add_option("experiment", experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember(chimera::experiment_names()));
  app.add_option("--config", config_path, "JSON configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "initial-condition seed");
  auto* seeds_opt = app.add_option("--seeds", seeds, "seed sweep")->delimiter(',');
  seeds_opt->excludes(seed_opt);
  app.add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  try {
    auto config = chimera::load_config(config_path);
    if (!config.experiment.empty() && config.experiment != experiment)
      throw chimera::ConfigError("config names experiment '" + config.experiment +
                                 "' but '" + experiment + "' was requested");
    config.experiment = experiment;
    if (*seed_opt) {
      if (config.ic_file) throw chimera::ConfigError("--seed cannot be combined with ic_file");
      config.ic.seed = seed;
    }
    if (!out.empty()) config.outputs = out;
    if (const char* env = std::getenv("CHIMERA_Q_OUT"); env && *env) config.outputs = env;

    if (*seeds_opt) {
      const auto sweep = chimera::seed_sweep(config, seeds, config.outputs);
      if (sweep.exit_code != chimera::kOk)
        std::cerr << nlohmann::json{{"error", "PartialFailure"},
                                    {"failed_seeds", sweep.failed},
                                    {"exit_code", sweep.exit_code}}
                         .dump()
                  << '\n';
      return sweep.exit_code;
    }
    const auto result = chimera::run(config);
    std::cout << (config.outputs / "manifest.json").string() << '\n';
    (void)result;
    return chimera::kOk;
  } catch (const std::exception& e) {
    return fail(e);
  }
}
