#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fpo::harness {

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// Nearest-rank quartiles of an unsorted sample (no interpolation).
Quartiles quartiles(std::vector<double> values);
double median(std::vector<double> values);

struct MethodSummary {
    std::string method;
    std::vector<double> final_j;            // per seed, seed order
    Quartiles final_quartiles;
    std::vector<double> median_curve;       // per-iteration median of J
    std::vector<double> median_mean_theta;  // per-iteration median of E_q[theta]
    int seeds = 0;
};

struct Summary {
    std::string environment;
    int iterations = 0;
    double prior_mean_theta = 0.0;
    std::map<std::string, MethodSummary> methods;
};

/// Folds one run directory per method (manifest.json + per-seed histories)
/// into quartiles of the final J and per-iteration median curves.
Summary aggregate(const std::vector<std::filesystem::path>& run_dirs);

void write_summary(const Summary& summary, const std::filesystem::path& path);
Summary read_summary(const std::filesystem::path& path);

}  // namespace fpo::harness
