#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fpo/fpocore.hpp"

namespace fpo::harness {

/// One parsed history row; the in-memory mirror of a CSV line.
struct HistoryRow {
    int iteration = 0;
    std::vector<double> psi;
    double j = 0.0;
    std::vector<double> fp_mean;
    std::vector<double> fp_std;
    double kl = 0.0;
    double seconds = 0.0;
};

/// Streaming writer with the fixed column order
/// iteration, psi..., J, fp_mean..., fp_std..., kl, seconds.
class HistoryWriter {
public:
    HistoryWriter(const std::filesystem::path& path, int psi_dim, int fp_dim);
    void append(const IterationRecord& rec);

private:
    std::ofstream out_;
    int psi_dim_;
    int fp_dim_;
};

std::vector<HistoryRow> read_history(const std::filesystem::path& path);

}  // namespace fpo::harness
