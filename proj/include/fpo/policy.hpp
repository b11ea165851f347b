#pragma once

#include <Eigen/Core>
#include <vector>

#include "fpo/rng.hpp"
#include "fpo/trajectory.hpp"

namespace fpo {

/// Diagonal-Gaussian summary of visited states (or taken actions) plus the
/// training iteration at which it was measured. Low-dimensional stand-in for
/// the policy inside the surrogate model.
struct Fingerprint {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
    int iteration = 0;
};

/// Which per-step quantity a fingerprint summarises.
enum class FingerprintMode { State, Action };

/// Floor applied elementwise to fingerprint standard deviations so the
/// Hellinger geometry stays well defined for near-deterministic policies.
inline constexpr double kFingerprintStdFloor = 1e-3;

/// Pooled anisotropic-Gaussian fit (population moments) over every state or
/// action in the trajectory set. Throws std::invalid_argument when the pool
/// is empty.
Fingerprint fit_fingerprint(const std::vector<Trajectory>& trajectories, FingerprintMode mode,
                            int iteration);

/// Gaussian policy: a tanh MLP produces the action mean, a state-independent
/// learnable log-stddev vector the spread. Parameters live in one flat vector
/// with a stable layout (per layer: weights column-major, then biases; the
/// log-stddev block last) so checkpoints and finite-difference probes agree.
class GaussianMlpPolicy {
public:
    GaussianMlpPolicy(int obs_dim, int action_dim, std::vector<int> hidden = {5, 5});

    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    int param_count() const { return static_cast<int>(params_.size()); }

    const Eigen::VectorXd& params() const { return params_; }
    /// Replaces all parameters; log-stddev entries are clamped into [-10, 2].
    void set_params(const Eigen::VectorXd& p);

    /// Fan-in-scaled uniform weights, zero biases, zero log-stddev.
    void init_params(Rng& rng);

    Eigen::VectorXd mean(const Eigen::VectorXd& obs) const;
    Eigen::VectorXd log_std() const;
    Eigen::VectorXd action_std() const;

    Eigen::VectorXd act(const Eigen::VectorXd& obs, Rng& rng) const;

    double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;

    /// Exact gradient of log_prob with respect to the flat parameter vector.
    Eigen::VectorXd grad_log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const;

    /// Directional derivative of mean(obs) along parameter direction v.
    Eigen::VectorXd mean_jvp(const Eigen::VectorXd& obs, const Eigen::VectorXd& v) const;

    /// Adds J_mean(obs)^T w into grad (length param_count).
    void mean_vjp_accumulate(const Eigen::VectorXd& obs, const Eigen::VectorXd& w,
                             Eigen::VectorXd& grad) const;

    /// KL(old || this) of the action distributions at one observation.
    double kl_from(const GaussianMlpPolicy& old_policy, const Eigen::VectorXd& obs) const;

private:
    struct LayerView {
        int w_offset;   // into the flat vector, column-major (out x in)
        int b_offset;
        int in;
        int out;
    };

    struct Forward {
        std::vector<Eigen::VectorXd> post;  // post[0] = obs, post[L] = mean
    };

    Eigen::Map<const Eigen::MatrixXd> weight(const LayerView& l) const;
    Eigen::Map<const Eigen::VectorXd> bias(const LayerView& l) const;
    Forward forward(const Eigen::VectorXd& obs) const;

    int obs_dim_;
    int action_dim_;
    std::vector<LayerView> layers_;
    int log_std_offset_;
    Eigen::VectorXd params_;
};

}  // namespace fpo
