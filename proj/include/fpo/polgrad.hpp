#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "fpo/envsim.hpp"
#include "fpo/policy.hpp"
#include "fpo/trajectory.hpp"

namespace fpo {

struct PolGradConfig {
    double gamma = 0.99;
    double gae_lambda = 1.0;
    double kl_limit = 0.01;
    int batch_size = 2000;  // steps per iteration
    int cg_iters = 10;
    double cg_damping = 0.1;
    double backtrack_ratio = 0.5;
    int max_backtracks = 10;
};

using ThetaSampler = std::function<Theta(Rng&)>;

/// One episode under a fixed theta. Draw order per step: action noise first,
/// then transition noise.
Trajectory rollout(const Environment& env, const GaussianMlpPolicy& policy, const Theta& theta,
                   int max_steps, Rng& rng);

/// Repeatedly draws theta ~ sampler and rolls out full episodes until the
/// step total reaches batch_size. Theta draws use substream 0 of `rng`;
/// episode i uses substream i+1, so rollout noise is independent of how the
/// thetas are produced.
std::vector<Trajectory> collect_batch(const Environment& env, const GaussianMlpPolicy& policy,
                                      const ThetaSampler& sample_theta, int batch_size,
                                      const Rng& rng);

/// Linear value model over (obs, obs^2, theta, t/H, (t/H)^2, 1). Fit by ridge
/// regression on discounted returns; theta is an input here even though the
/// policy never sees it.
struct ValueBaseline {
    Eigen::VectorXd weights;  // empty means "predict 0"
    double intercept = 0.0;

    bool fitted() const { return weights.size() > 0; }
    static Eigen::VectorXd features(const Eigen::VectorXd& obs, double theta, double t_frac);
    double predict(const Eigen::VectorXd& obs, double theta, double t_frac) const;
};

ValueBaseline fit_baseline(const std::vector<Trajectory>& batch, const PolGradConfig& config,
                           int horizon, double ridge = 1e-10);

struct AdvantageResult {
    std::vector<Eigen::VectorXd> advantages;  // per trajectory, normalised across the batch
    std::vector<Eigen::VectorXd> returns;     // discounted returns G_t
};

AdvantageResult compute_advantages(const std::vector<Trajectory>& batch,
                                   const ValueBaseline& baseline, const PolGradConfig& config,
                                   int horizon, bool normalize = true);

/// Joint zero-mean/unit-variance normalisation of several advantage sets
/// under mixture weights: moments are the weight-averaged per-group moments.
/// A single group of weight 1 reduces to the plain batch normalisation, and
/// degenerate weights leave the surviving group bit-identical to it. Keeping
/// one shared scale across groups is what lets a rare but high-magnitude
/// group keep its influence after probability weighting.
void normalize_advantages_weighted(std::span<std::vector<Eigen::VectorXd>*> advantage_sets,
                                   std::span<const double> weights);

/// Trajectories plus advantages plus a mixture weight; the policy update
/// operates on a weighted set of these so the enumerated-theta estimator can
/// combine per-theta groups without special cases.
struct AdvantageGroup {
    const std::vector<Trajectory>* trajectories = nullptr;
    const std::vector<Eigen::VectorXd>* advantages = nullptr;
    double weight = 1.0;
};

/// Mean over all steps of grad_log_prob * advantage.
Eigen::VectorXd policy_gradient(const GaussianMlpPolicy& policy,
                                const std::vector<Trajectory>& batch,
                                const std::vector<Eigen::VectorXd>& advantages);

/// (F + damping I) v where F is the Gauss-Newton KL Hessian averaged over the
/// batch states, evaluated matrix-free.
Eigen::VectorXd fisher_vector_product(const GaussianMlpPolicy& policy,
                                      const std::vector<Trajectory>& batch,
                                      const Eigen::VectorXd& v, double damping);

Eigen::VectorXd fisher_vector_product(const GaussianMlpPolicy& policy,
                                      std::span<const AdvantageGroup> groups,
                                      const Eigen::VectorXd& v, double damping);

using MatVec = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Plain conjugate gradient on A x = b.
Eigen::VectorXd conjugate_gradient(const MatVec& apply, const Eigen::VectorXd& b, int iters,
                                   double residual_tol = 1e-12);

/// Natural-gradient step before line search: x = A^{-1} g via CG, scaled so
/// the local quadratic model of KL equals kl_limit.
Eigen::VectorXd trpo_step_direction(const MatVec& apply, const Eigen::VectorXd& g, int cg_iters,
                                    double kl_limit);

enum class UpdateStatus { Accepted, ZeroGradient, LineSearchFailed };

struct UpdateResult {
    Eigen::VectorXd params;
    UpdateStatus status = UpdateStatus::Accepted;
    double kl = 0.0;           // measured mean KL(old || new) at acceptance
    double improvement = 0.0;  // surrogate gain at acceptance
    int backtracks = 0;
    double cg_residual = 0.0;  // ||Ax - g|| / ||g||
};

/// KL-constrained update with backtracking line search: accepts the first
/// step whose measured KL stays within kl_limit and whose importance-weighted
/// surrogate does not regress. Falls back to the unchanged parameters when
/// every backtrack fails.
UpdateResult kl_constrained_update(const GaussianMlpPolicy& policy, const Eigen::VectorXd& g,
                                   std::span<const AdvantageGroup> groups,
                                   const PolGradConfig& config);

UpdateResult kl_constrained_update(const GaussianMlpPolicy& policy, const Eigen::VectorXd& g,
                                   const std::vector<Trajectory>& batch,
                                   const std::vector<Eigen::VectorXd>& advantages,
                                   const PolGradConfig& config);

/// Mean KL(old || new) over every state in the groups, weighted per group.
double mean_kl(const GaussianMlpPolicy& old_policy, const GaussianMlpPolicy& new_policy,
               std::span<const AdvantageGroup> groups);

}  // namespace fpo
