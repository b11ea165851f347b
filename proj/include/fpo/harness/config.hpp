#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fpo/fpocore.hpp"
#include "fpo/harness/toml.hpp"

namespace fpo::harness {

/// Fully resolved experiment description: every default is materialised at
/// load time so the manifest pins the complete configuration.
struct ExperimentConfig {
    std::string name;
    std::string environment;  // "cliff" | "toy"
    std::string method;       // see fpo::method_name
    int iterations = 300;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string output_dir;
    int threads = 1;

    CliffWalkerConfig cliff;
    double cliff_prior_a = 2.0;
    double cliff_prior_b = 1.0;
    ToyVelocityConfig toy;

    TrainerOptions trainer;  // method-specific knobs resolved inside

    static ExperimentConfig from_toml(const toml::Document& doc);
    static ExperimentConfig load(const std::string& path);

    /// Validation beyond per-field parsing: method/environment compatibility
    /// and cross-field invariants. Throws std::invalid_argument.
    void validate() const;

    std::shared_ptr<const Environment> make_environment() const;

    /// Manifest JSON (resolved config + code revision); deterministic bytes.
    std::string manifest_json() const;
};

/// Code revision baked in at build time.
std::string code_version();

}  // namespace fpo::harness
