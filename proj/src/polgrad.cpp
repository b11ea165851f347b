#include "fpo/polgrad.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace fpo {

Trajectory rollout(const Environment& env, const GaussianMlpPolicy& policy, const Theta& theta,
                   int max_steps, Rng& rng) {
    Trajectory traj;
    traj.theta = theta;
    Eigen::VectorXd state = env.reset(rng);
    for (int t = 0; t < max_steps; ++t) {
        Eigen::VectorXd action = policy.act(state, rng);
        StepResult sr = env.step(state, action, theta, rng);
        traj.observations.push_back(state);
        traj.actions.push_back(std::move(action));
        traj.rewards.push_back(sr.reward);
        traj.terminals.push_back(sr.terminal ? 1 : 0);
        state = std::move(sr.next_state);
        if (sr.terminal) break;
    }
    return traj;
}

std::vector<Trajectory> collect_batch(const Environment& env, const GaussianMlpPolicy& policy,
                                      const ThetaSampler& sample_theta, int batch_size,
                                      const Rng& rng) {
    if (batch_size < 1) {
        throw std::invalid_argument("collect_batch: batch_size must be >= 1");
    }
    std::vector<Trajectory> batch;
    Rng theta_rng = rng.substream(0);
    long total = 0;
    for (std::uint64_t episode = 0; total < batch_size; ++episode) {
        const Theta theta = sample_theta(theta_rng);
        Rng ep_rng = rng.substream(episode + 1);
        Trajectory traj = rollout(env, policy, theta, env.horizon(), ep_rng);
        total += traj.length();
        batch.push_back(std::move(traj));
    }
    return batch;
}

Eigen::VectorXd ValueBaseline::features(const Eigen::VectorXd& obs, double theta, double t_frac) {
    const int n = static_cast<int>(obs.size());
    Eigen::VectorXd f(2 * n + 3);
    f.head(n) = obs;
    f.segment(n, n) = obs.array().square();
    f[2 * n] = theta;
    f[2 * n + 1] = t_frac;
    f[2 * n + 2] = t_frac * t_frac;
    return f;
}

double ValueBaseline::predict(const Eigen::VectorXd& obs, double theta, double t_frac) const {
    if (!fitted()) return 0.0;
    return features(obs, theta, t_frac).dot(weights) + intercept;
}

namespace {

std::vector<Eigen::VectorXd> discounted_returns(const std::vector<Trajectory>& batch,
                                                double gamma) {
    std::vector<Eigen::VectorXd> returns;
    returns.reserve(batch.size());
    for (const auto& traj : batch) {
        const int T = traj.length();
        Eigen::VectorXd g(T);
        double acc = 0.0;
        for (int t = T - 1; t >= 0; --t) {
            acc = traj.rewards[t] + gamma * acc;
            g[t] = acc;
        }
        returns.push_back(std::move(g));
    }
    return returns;
}

}  // namespace

ValueBaseline fit_baseline(const std::vector<Trajectory>& batch, const PolGradConfig& config,
                           int horizon, double ridge) {
    if (batch.empty()) {
        throw std::invalid_argument("fit_baseline: empty batch");
    }
    const auto returns = discounted_returns(batch, config.gamma);

    long n = 0;
    for (const auto& traj : batch) n += traj.length();
    const int d = 2 * static_cast<int>(batch.front().observations.front().size()) + 3;

    // Centre both features and targets; the intercept is recovered exactly,
    // so a constant-return batch regresses to that constant.
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    long row = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& traj = batch[i];
        for (int t = 0; t < traj.length(); ++t) {
            X.row(row) = ValueBaseline::features(traj.observations[t], traj.theta.value,
                                                 static_cast<double>(t) / horizon);
            y[row] = returns[i][t];
            ++row;
        }
    }
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    X.rowwise() -= x_mean;
    y.array() -= y_mean;

    Eigen::MatrixXd gram = X.transpose() * X;
    const double scale = gram.trace() / d;
    gram.diagonal().array() += ridge * (scale > 0.0 ? scale : 1.0) + 1e-12;

    ValueBaseline vb;
    vb.weights = gram.ldlt().solve(X.transpose() * y);
    vb.intercept = y_mean - x_mean.dot(vb.weights);
    return vb;
}

AdvantageResult compute_advantages(const std::vector<Trajectory>& batch,
                                   const ValueBaseline& baseline, const PolGradConfig& config,
                                   int horizon, bool normalize) {
    AdvantageResult out;
    out.returns = discounted_returns(batch, config.gamma);
    out.advantages.reserve(batch.size());

    for (const auto& traj : batch) {
        const int T = traj.length();
        Eigen::VectorXd values(T + 1);
        for (int t = 0; t < T; ++t) {
            values[t] = baseline.predict(traj.observations[t], traj.theta.value,
                                         static_cast<double>(t) / horizon);
        }
        // No bootstrap past the last step: horizon cut-offs are treated the
        // same as terminals, consistent with pure Monte-Carlo returns.
        values[T] = 0.0;

        Eigen::VectorXd adv(T);
        double acc = 0.0;
        for (int t = T - 1; t >= 0; --t) {
            const double delta = traj.rewards[t] + config.gamma * values[t + 1] - values[t];
            acc = delta + config.gamma * config.gae_lambda * acc;
            adv[t] = acc;
        }
        out.advantages.push_back(std::move(adv));
    }

    if (normalize) {
        std::vector<Eigen::VectorXd>* sets[] = {&out.advantages};
        const double weights[] = {1.0};
        normalize_advantages_weighted(sets, weights);
    }
    return out;
}

void normalize_advantages_weighted(std::span<std::vector<Eigen::VectorXd>*> advantage_sets,
                                   std::span<const double> weights) {
    if (advantage_sets.size() != weights.size()) {
        throw std::invalid_argument("normalize_advantages_weighted: size mismatch");
    }
    double mean = 0.0;
    for (std::size_t g = 0; g < advantage_sets.size(); ++g) {
        long n = 0;
        double sum = 0.0;
        for (const auto& a : *advantage_sets[g]) {
            n += a.size();
            sum += a.sum();
        }
        if (n > 0) mean += weights[g] * (sum / static_cast<double>(n));
    }
    double var = 0.0;
    for (std::size_t g = 0; g < advantage_sets.size(); ++g) {
        long n = 0;
        double sq = 0.0;
        for (const auto& a : *advantage_sets[g]) {
            n += a.size();
            sq += (a.array() - mean).square().sum();
        }
        if (n > 0) var += weights[g] * (sq / static_cast<double>(n));
    }
    const double std = std::sqrt(var);
    for (auto* set : advantage_sets) {
        for (auto& a : *set) {
            a = (a.array() - mean) / (std + 1e-8);
        }
    }
}

Eigen::VectorXd policy_gradient(const GaussianMlpPolicy& policy,
                                const std::vector<Trajectory>& batch,
                                const std::vector<Eigen::VectorXd>& advantages) {
    if (batch.size() != advantages.size()) {
        throw std::invalid_argument("policy_gradient: batch/advantage size mismatch");
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(policy.param_count());
    long n = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& traj = batch[i];
        for (int t = 0; t < traj.length(); ++t) {
            g += policy.grad_log_prob(traj.observations[t], traj.actions[t]) * advantages[i][t];
            ++n;
        }
    }
    return g / static_cast<double>(n);
}

Eigen::VectorXd fisher_vector_product(const GaussianMlpPolicy& policy,
                                      std::span<const AdvantageGroup> groups,
                                      const Eigen::VectorXd& v, double damping) {
    if (v.size() != policy.param_count()) {
        throw std::invalid_argument("fisher_vector_product: direction size mismatch");
    }
    const int A = policy.action_dim();
    const Eigen::VectorXd inv_var = (-2.0 * policy.log_std()).array().exp();

    Eigen::VectorXd result = Eigen::VectorXd::Zero(v.size());
    for (const auto& group : groups) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(v.size());
        long n = 0;
        for (const auto& traj : *group.trajectories) {
            for (const auto& obs : traj.observations) {
                const Eigen::VectorXd r = policy.mean_jvp(obs, v);
                policy.mean_vjp_accumulate(obs, r.cwiseProduct(inv_var), acc);
                ++n;
            }
        }
        if (n > 0) result += (group.weight / static_cast<double>(n)) * acc;
    }
    // The log-std block of the KL Hessian is exactly 2 I.
    result.tail(A) += 2.0 * v.tail(A);
    result += damping * v;
    return result;
}

Eigen::VectorXd fisher_vector_product(const GaussianMlpPolicy& policy,
                                      const std::vector<Trajectory>& batch,
                                      const Eigen::VectorXd& v, double damping) {
    const AdvantageGroup group{&batch, nullptr, 1.0};
    return fisher_vector_product(policy, std::span<const AdvantageGroup>(&group, 1), v, damping);
}

Eigen::VectorXd conjugate_gradient(const MatVec& apply, const Eigen::VectorXd& b, int iters,
                                   double residual_tol) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = b;
    double rs = r.squaredNorm();
    for (int i = 0; i < iters && rs > residual_tol; ++i) {
        const Eigen::VectorXd ap = apply(p);
        const double alpha = rs / p.dot(ap);
        x += alpha * p;
        r -= alpha * ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
    }
    return x;
}

Eigen::VectorXd trpo_step_direction(const MatVec& apply, const Eigen::VectorXd& g, int cg_iters,
                                    double kl_limit) {
    const Eigen::VectorXd x = conjugate_gradient(apply, g, cg_iters);
    const double quad = x.dot(apply(x));
    if (quad <= 0.0) {
        return Eigen::VectorXd::Zero(g.size());
    }
    return std::sqrt(2.0 * kl_limit / quad) * x;
}

double mean_kl(const GaussianMlpPolicy& old_policy, const GaussianMlpPolicy& new_policy,
               std::span<const AdvantageGroup> groups) {
    double kl = 0.0;
    for (const auto& group : groups) {
        double acc = 0.0;
        long n = 0;
        for (const auto& traj : *group.trajectories) {
            for (const auto& obs : traj.observations) {
                acc += new_policy.kl_from(old_policy, obs);
                ++n;
            }
        }
        if (n > 0) kl += group.weight * acc / static_cast<double>(n);
    }
    return kl;
}

namespace {

/// Importance-weighted surrogate objective relative to the old policy.
double surrogate(const GaussianMlpPolicy& old_policy, const GaussianMlpPolicy& new_policy,
                 std::span<const AdvantageGroup> groups) {
    double total = 0.0;
    for (const auto& group : groups) {
        double acc = 0.0;
        long n = 0;
        const auto& trajs = *group.trajectories;
        const auto& advs = *group.advantages;
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            for (int t = 0; t < trajs[i].length(); ++t) {
                const double ratio =
                    std::exp(new_policy.log_prob(trajs[i].observations[t], trajs[i].actions[t]) -
                             old_policy.log_prob(trajs[i].observations[t], trajs[i].actions[t]));
                acc += ratio * advs[i][t];
                ++n;
            }
        }
        if (n > 0) total += group.weight * acc / static_cast<double>(n);
    }
    return total;
}

}  // namespace

UpdateResult kl_constrained_update(const GaussianMlpPolicy& policy, const Eigen::VectorXd& g,
                                   std::span<const AdvantageGroup> groups,
                                   const PolGradConfig& config) {
    if (!g.allFinite()) {
        throw std::invalid_argument("kl_constrained_update: non-finite gradient");
    }
    UpdateResult out;
    out.params = policy.params();
    if (g.norm() == 0.0) {
        out.status = UpdateStatus::ZeroGradient;
        return out;
    }

    const MatVec apply = [&](const Eigen::VectorXd& v) {
        return fisher_vector_product(policy, groups, v, config.cg_damping);
    };
    const Eigen::VectorXd x = conjugate_gradient(apply, g, config.cg_iters);
    out.cg_residual = (apply(x) - g).norm() / g.norm();
    const double quad = x.dot(apply(x));
    if (quad <= 0.0 || !std::isfinite(quad)) {
        out.status = UpdateStatus::LineSearchFailed;
        return out;
    }
    const Eigen::VectorXd full_step = std::sqrt(2.0 * config.kl_limit / quad) * x;

    GaussianMlpPolicy candidate = policy;
    const double surrogate_before = surrogate(policy, policy, groups);
    double scale = 1.0;
    for (int k = 0; k <= config.max_backtracks; ++k, scale *= config.backtrack_ratio) {
        candidate.set_params(policy.params() + scale * full_step);
        const double kl = mean_kl(policy, candidate, groups);
        const double gain = surrogate(policy, candidate, groups) - surrogate_before;
        if (kl <= config.kl_limit && gain >= 0.0) {
            out.params = candidate.params();
            out.status = UpdateStatus::Accepted;
            out.kl = kl;
            out.improvement = gain;
            out.backtracks = k;
            return out;
        }
    }
    out.status = UpdateStatus::LineSearchFailed;
    return out;
}

UpdateResult kl_constrained_update(const GaussianMlpPolicy& policy, const Eigen::VectorXd& g,
                                   const std::vector<Trajectory>& batch,
                                   const std::vector<Eigen::VectorXd>& advantages,
                                   const PolGradConfig& config) {
    const AdvantageGroup group{&batch, &advantages, 1.0};
    return kl_constrained_update(policy, g, std::span<const AdvantageGroup>(&group, 1), config);
}

}  // namespace fpo
