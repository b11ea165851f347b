#pragma once

#include <filesystem>

#include "fpo/harness/aggregate.hpp"

namespace fpo::harness {

/// Median J vs iteration, one polyline per method. Deterministic bytes for
/// a given summary.
void write_learning_curve_svg(const Summary& summary, const std::filesystem::path& path);

/// Mean of the selected q_psi vs iteration for psi-driven methods, with the
/// prior mean as a reference line.
void write_psi_schedule_svg(const Summary& summary, const std::filesystem::path& path);

}  // namespace fpo::harness
