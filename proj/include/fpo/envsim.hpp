#pragma once

#include <Eigen/Core>
#include <memory>
#include <vector>

#include "fpo/rng.hpp"

namespace fpo {

/// One realisation of the environment variable. Scalar everywhere in this
/// codebase: the cliff walker uses an offset in [0,1], the toy velocity task
/// an index in {0,1}.
struct Theta {
    double value = 0.0;
};

struct StepResult {
    Eigen::VectorXd next_state;
    double reward = 0.0;
    bool terminal = false;
};

/// Beta(a, b) on [0, 1] with closed-form pdf and a gamma-ratio sampler.
class BetaDistribution {
public:
    BetaDistribution(double a, double b);

    double pdf(double x) const;  // throws std::domain_error outside [0, 1]
    double sample(Rng& rng) const;
    double mean() const { return a_ / (a_ + b_); }
    double alpha() const { return a_; }
    double beta() const { return b_; }

private:
    double a_;
    double b_;
    double log_norm_;  // log B(a, b)
};

inline BetaDistribution beta_prior(double a = 2.0, double b = 1.0) { return {a, b}; }

/// Description of theta's support: either a finite set with probabilities or
/// an interval carrying a continuous prior density.
struct ThetaSupport {
    bool discrete = false;
    std::vector<double> values;  // discrete case
    std::vector<double> probs;
    double lo = 0.0;  // continuous case
    double hi = 1.0;
};

/// Episodic theta-parameterised environment. Stepping is a pure function of
/// (state, action, theta, rng draw), so rollouts may run concurrently as long
/// as each owns its random stream.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual int horizon() const = 0;

    virtual Eigen::VectorXd reset(Rng& rng) const = 0;
    virtual StepResult step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                            const Theta& theta, Rng& rng) const = 0;

    virtual ThetaSupport theta_support() const = 0;
    virtual Theta sample_prior(Rng& rng) const = 0;
    /// Prior density at theta; only meaningful for continuous supports.
    virtual double prior_pdf(double theta) const = 0;
};

struct CliffWalkerConfig {
    double step_size = 0.025;
    double noise_scale = 0.005;
    double cliff_base = 1.0;
    double fall_reward = -5000.0;  // 0 selects the no-rare-event variant
    int horizon = 500;
    double init_scale = 0.05;  // start state uniform on [-init_scale, init_scale]
};

/// Continuous-state cliff walker. The agent drifts right or left by
/// step_size plus Gaussian noise; states below the cliff location
/// (cliff_base + theta) pay their own value as reward, crossing it ends the
/// episode at fall_reward.
class CliffWalker : public Environment {
public:
    explicit CliffWalker(CliffWalkerConfig config = {}, BetaDistribution prior = beta_prior());

    int state_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    int horizon() const override { return config_.horizon; }

    Eigen::VectorXd reset(Rng& rng) const override;
    StepResult step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                    const Theta& theta, Rng& rng) const override;

    ThetaSupport theta_support() const override;
    Theta sample_prior(Rng& rng) const override;
    double prior_pdf(double theta) const override;

    const CliffWalkerConfig& config() const { return config_; }
    const BetaDistribution& prior() const { return prior_; }

private:
    CliffWalkerConfig config_;
    BetaDistribution prior_;
};

struct ToyVelocityConfig {
    double target_low = 2.0;
    double target_high = 4.0;
    double p_high = 0.02;
    double bonus = 200.0;
    int horizon = 100;
};

/// 1-D point mass tracking a hidden target velocity. theta = 0 selects the
/// common low target, theta = 1 the rare high target which also pays a large
/// bonus near target_high. theta never enters the observation.
class ToyVelocity : public Environment {
public:
    explicit ToyVelocity(ToyVelocityConfig config = {});

    int state_dim() const override { return 2; }  // (position, velocity)
    int action_dim() const override { return 1; }
    int horizon() const override { return config_.horizon; }

    Eigen::VectorXd reset(Rng& rng) const override;
    StepResult step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                    const Theta& theta, Rng& rng) const override;

    ThetaSupport theta_support() const override;
    Theta sample_prior(Rng& rng) const override;
    double prior_pdf(double theta) const override;

    const ToyVelocityConfig& config() const { return config_; }

private:
    ToyVelocityConfig config_;
};

}  // namespace fpo
