#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsol/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-solitons of the 1-D NLS with a delta potential"};
  std::string mode, config, output_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode, "groundstate | spectrum | evolve | shoot | norm-equiv | verify")->required();
  app.add_option("--config", config, "experiment configuration (JSON)")->required();
  app.add_option("--output-dir", output_dir, "overrides output_dir of the configuration");
  app.add_option("--seed", seed, "overrides the seed of the configuration");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? dsol::kExitPass : dsol::kExitOperational;
  }

  const auto m = dsol::parse_mode(mode);
  if (!m) {
    std::cerr << "unknown mode '" << mode << "'\n";
    return dsol::kExitOperational;
  }
  try {
    dsol::ExperimentConfig cfg = dsol::load_config(config, m, seed);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    const int code = dsol::run_experiment(cfg, std::cout);
    std::cout << (code == dsol::kExitPass ? "PASS" : "FAIL") << '\n';
    return code;
  } catch (const dsol::ConfigError& e) {
    std::cerr << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return dsol::kExitOperational;
}
