#pragma once

#include <iosfwd>

#include "dsol/io.hpp"

namespace dsol {

inline constexpr int kExitPass = 0;
inline constexpr int kExitOperational = 1;
inline constexpr int kExitCheckFailed = 2;

// Runs one experiment and writes its artifacts (config.json plus the mode's
// CSV/JSON/checkpoint files) into cfg.output_dir. Returns kExitPass or
// kExitCheckFailed; operational problems are thrown.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace dsol
