#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <numeric>
#include <vector>

#include "fpo/envsim.hpp"

namespace fpo {

/// One episode: parallel per-step arrays plus the theta it was rolled out
/// under. Ends either at an environment terminal or at the horizon.
struct Trajectory {
    std::vector<Eigen::VectorXd> observations;
    std::vector<Eigen::VectorXd> actions;
    std::vector<double> rewards;
    std::vector<std::uint8_t> terminals;  // environment termination, not time limit
    Theta theta;

    int length() const { return static_cast<int>(rewards.size()); }

    double undiscounted_return() const {
        return std::accumulate(rewards.begin(), rewards.end(), 0.0);
    }
};

}  // namespace fpo
