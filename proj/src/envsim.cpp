#include "fpo/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpo {

namespace {

// sign(0) := +1 so ties resolve deterministically.
double sign(double x) { return x >= 0.0 ? 1.0 : -1.0; }

Eigen::VectorXd scalar_state(double s) {
    Eigen::VectorXd v(1);
    v[0] = s;
    return v;
}

}  // namespace

BetaDistribution::BetaDistribution(double a, double b) : a_(a), b_(b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("BetaDistribution: shape parameters must be positive");
    }
    log_norm_ = std::lgamma(a_) + std::lgamma(b_) - std::lgamma(a_ + b_);
}

double BetaDistribution::pdf(double x) const {
    if (x < 0.0 || x > 1.0) {
        throw std::domain_error("BetaDistribution::pdf: argument outside [0, 1]");
    }
    // Endpoint conventions for shape parameters at/below 1 keep the density finite.
    if (x == 0.0) {
        if (a_ < 1.0) return std::numeric_limits<double>::infinity();
        if (a_ == 1.0) return std::exp(-log_norm_);
        return 0.0;
    }
    if (x == 1.0) {
        if (b_ < 1.0) return std::numeric_limits<double>::infinity();
        if (b_ == 1.0) return std::exp(-log_norm_);
        return 0.0;
    }
    return std::exp((a_ - 1.0) * std::log(x) + (b_ - 1.0) * std::log1p(-x) - log_norm_);
}

double BetaDistribution::sample(Rng& rng) const {
    const double x = rng.gamma(a_);
    const double y = rng.gamma(b_);
    const double denom = x + y;
    if (denom <= 0.0) {
        return 0.5;
    }
    return std::clamp(x / denom, 0.0, 1.0);
}

CliffWalker::CliffWalker(CliffWalkerConfig config, BetaDistribution prior)
    : config_(config), prior_(prior) {
    if (config_.horizon < 1) {
        throw std::invalid_argument("CliffWalker: horizon must be >= 1");
    }
    if (config_.noise_scale < 0.0) {
        throw std::invalid_argument("CliffWalker: noise_scale must be >= 0");
    }
    if (config_.fall_reward > 0.0) {
        throw std::invalid_argument("CliffWalker: fall_reward must be <= 0");
    }
}

Eigen::VectorXd CliffWalker::reset(Rng& rng) const {
    if (config_.init_scale == 0.0) {
        return scalar_state(0.0);
    }
    return scalar_state(rng.uniform(-config_.init_scale, config_.init_scale));
}

StepResult CliffWalker::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                             const Theta& theta, Rng& rng) const {
    const double eps = rng.normal();
    const double next = state[0] + config_.step_size * sign(action[0]) + config_.noise_scale * eps;
    StepResult out;
    out.next_state = scalar_state(next);
    if (next < config_.cliff_base + theta.value) {
        out.reward = next;
        out.terminal = false;
    } else {
        out.reward = config_.fall_reward;
        out.terminal = true;
    }
    return out;
}

ThetaSupport CliffWalker::theta_support() const {
    ThetaSupport s;
    s.discrete = false;
    s.lo = 0.0;
    s.hi = 1.0;
    return s;
}

Theta CliffWalker::sample_prior(Rng& rng) const { return Theta{prior_.sample(rng)}; }

double CliffWalker::prior_pdf(double theta) const { return prior_.pdf(theta); }

ToyVelocity::ToyVelocity(ToyVelocityConfig config) : config_(config) {
    if (config_.horizon < 1) {
        throw std::invalid_argument("ToyVelocity: horizon must be >= 1");
    }
    if (config_.p_high < 0.0 || config_.p_high > 1.0) {
        throw std::invalid_argument("ToyVelocity: p_high must lie in [0, 1]");
    }
}

Eigen::VectorXd ToyVelocity::reset(Rng& /*rng*/) const { return Eigen::VectorXd::Zero(2); }

StepResult ToyVelocity::step(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
                             const Theta& theta, Rng& /*rng*/) const {
    const double v = std::clamp(state[1] + 0.1 * std::tanh(action[0]), 0.0, 6.0);
    const bool high = theta.value >= 0.5;
    const double target = high ? config_.target_high : config_.target_low;
    double reward = -std::abs(v - target);
    if (high) {
        const double d = v - config_.target_high;
        reward += config_.bonus * std::exp(-d * d);
    }
    StepResult out;
    out.next_state = Eigen::VectorXd(2);
    out.next_state[0] = state[0] + 0.01 * v;
    out.next_state[1] = v;
    out.reward = reward;
    out.terminal = false;
    return out;
}

ThetaSupport ToyVelocity::theta_support() const {
    ThetaSupport s;
    s.discrete = true;
    s.values = {0.0, 1.0};
    s.probs = {1.0 - config_.p_high, config_.p_high};
    return s;
}

Theta ToyVelocity::sample_prior(Rng& rng) const {
    const double probs[] = {1.0 - config_.p_high, config_.p_high};
    return Theta{static_cast<double>(rng.categorical(probs))};
}

double ToyVelocity::prior_pdf(double /*theta*/) const {
    throw std::logic_error("ToyVelocity: discrete support has no prior density");
}

}  // namespace fpo
