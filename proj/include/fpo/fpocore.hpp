#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fpo/acquisition.hpp"
#include "fpo/envsim.hpp"
#include "fpo/evalret.hpp"
#include "fpo/gpmodel.hpp"
#include "fpo/polgrad.hpp"
#include "fpo/policy.hpp"
#include "fpo/psi.hpp"

namespace fpo {

/// Environment-specific map from a bounded psi vector to a distribution
/// q_psi over theta. The acquisition layer treats psi as opaque.
class PsiMapping {
public:
    virtual ~PsiMapping() = default;
    virtual PsiBounds bounds() const = 0;
    virtual ThetaSampler sampler(const PsiPoint& psi) const = 0;
    /// Mean of q_psi over theta, for reporting the selected schedule.
    virtual double mean_theta(const PsiPoint& psi) const = 0;
    /// The psi whose q_psi coincides with the environment prior.
    virtual PsiPoint prior_psi() const = 0;
};

/// psi = (a, b) in [0.05, 20]^2 mapped to Beta(a, b) over theta.
class BetaPsiMapping : public PsiMapping {
public:
    PsiBounds bounds() const override { return PsiBounds::box({0.05, 0.05}, {20.0, 20.0}); }
    ThetaSampler sampler(const PsiPoint& psi) const override;
    double mean_theta(const PsiPoint& psi) const override {
        return psi.values[0] / (psi.values[0] + psi.values[1]);
    }
    PsiPoint prior_psi() const override;
};

/// Scalar psi in [0, 1]: the probability of theta = 1.
class BernoulliPsiMapping : public PsiMapping {
public:
    explicit BernoulliPsiMapping(double prior_p_high) : prior_p_high_(prior_p_high) {}
    PsiBounds bounds() const override { return PsiBounds::box({0.0}, {1.0}); }
    ThetaSampler sampler(const PsiPoint& psi) const override;
    double mean_theta(const PsiPoint& psi) const override { return psi.values[0]; }
    PsiPoint prior_psi() const override;

private:
    double prior_p_high_;
};

enum class Method {
    FpoUcbState,
    FpoUcbAction,
    Naive,
    Enum,
    Random,
    Fixed,
    Epopt,
};

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

struct TrainerOptions {
    Method method = Method::FpoUcbState;
    PolGradConfig polgrad;
    AcquisitionConfig acquisition;
    QuadratureConfig quadrature;
    int total_iterations = 300;         // scales the GP's iteration input
    std::vector<int> policy_hidden = {5, 5};

    // Fixed baseline
    std::vector<double> fixed_psi;

    // EPOpt
    double epopt_epsilon = 0.2;
    int epopt_rejection_start_iter = 50;
    bool epopt_keep_high = false;  // keep the top tail for positive-reward rare events

    /// Ablation: pair the GP row with the post-update fingerprint instead of
    /// the fingerprint of the policy that entered the update.
    bool pair_updated_fingerprint = false;

    /// Optional override of psi_0 (empty = method default). Lets a run be
    /// replayed from a chosen opening distribution.
    std::vector<double> initial_psi;
};

/// Loop state threaded through iterations.
struct FpoState {
    GaussianMlpPolicy policy;
    ValueBaseline baseline;
    GPDataset gp_data;
    GPHypers hypers;
    int iteration = 0;
    Fingerprint last_fingerprint;        // fingerprint of the current policy
    std::vector<PsiPoint> psi_history;   // psi_0 ... psi_n
    std::vector<double> j_history;       // J(pi_0) ... J(pi_n)
};

/// Per-iteration log record; one row of the history file. `gradient` is a
/// diagnostic copy of the assembled policy gradient, not persisted.
struct IterationRecord {
    int iteration = 0;
    Eigen::VectorXd psi;       // the psi the iteration trained under
    double mean_theta = 0.0;   // mean of q_psi
    double j = 0.0;
    bool j_converged = true;
    Fingerprint fingerprint;
    double kl = 0.0;
    double improvement = 0.0;
    bool accepted = false;
    double seconds = 0.0;
    Eigen::VectorXd gradient;
};

/// Runs one method on one environment under one seed. All methods share the
/// policy-update, J-evaluation, and logging paths; they differ only in how
/// each batch's thetas are produced and (for EPOpt) which trajectories are
/// kept. Phase substreams: collection / evaluation / acquisition draws are
/// independent, so changing one never perturbs the others.
class Trainer {
public:
    /// Stream layout contract: every iteration draws from three independent
    /// substreams of the run seed.
    enum Phase : std::uint64_t { kCollect = 0, kEval = 1, kAcquire = 2 };

    Trainer(std::shared_ptr<const Environment> env, TrainerOptions options, std::uint64_t seed);

    IterationRecord step();
    const FpoState& state() const { return state_; }
    const PsiMapping& psi_mapping() const { return *mapping_; }
    const Environment& env() const { return *env_; }

    static Rng phase_stream(std::uint64_t seed, int iteration, Phase phase) {
        return Rng(seed).substream(static_cast<std::uint64_t>(iteration)).substream(phase);
    }

    /// Test hook: overrides psi selection for FPO methods (e.g. pin it to
    /// the prior's own parameters).
    void stub_psi_selection(std::function<PsiPoint()> stub) { psi_stub_ = std::move(stub); }

private:
    Rng phase_rng(int iteration, Phase phase) const;
    JEstimate evaluate_j(Rng& rng) const;
    Fingerprint fingerprint_of(const std::vector<Trajectory>& rollouts, int iteration) const;

    /// Shared tail of every iteration: policy update on the given groups,
    /// J evaluation, fingerprint, history bookkeeping.
    IterationRecord finish_iteration(int n, const PsiPoint& psi_used,
                                     const std::vector<Trajectory>& batch,
                                     std::span<const AdvantageGroup> groups,
                                     const Eigen::VectorXd& gradient);

    IterationRecord fpo_iteration(int n);
    IterationRecord naive_iteration(int n);
    IterationRecord enum_iteration(int n);
    IterationRecord random_iteration(int n);
    IterationRecord fixed_iteration(int n);
    IterationRecord epopt_iteration(int n);

    std::shared_ptr<const Environment> env_;
    TrainerOptions options_;
    std::unique_ptr<PsiMapping> mapping_;
    std::uint64_t seed_;
    FpoState state_;
    std::function<PsiPoint()> psi_stub_;
};

/// EPOpt trajectory filter: indices of the kept trajectories given batch
/// returns, using the nearest-rank epsilon quantile. Never returns an empty
/// set (the single worst/best trajectory survives).
std::vector<std::size_t> epopt_retained_indices(const std::vector<double>& returns,
                                                double epsilon, bool keep_high);

}  // namespace fpo
