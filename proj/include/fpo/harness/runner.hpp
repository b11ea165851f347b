#pragma once

#include <filesystem>
#include <iosfwd>

#include "fpo/harness/config.hpp"

namespace fpo::harness {

/// Executes every seed of one experiment and writes
///   <dir>/manifest.json
///   <dir>/history_seed<seed>.csv
/// Seeds are independent and may run on parallel threads; files and RNG
/// streams are per-seed, so the results do not depend on scheduling.
/// Returns the run directory.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& output_root, std::ostream& log);

}  // namespace fpo::harness
