#include "fpo/fpocore.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fpo {

ThetaSampler BetaPsiMapping::sampler(const PsiPoint& psi) const {
    const BetaDistribution q(psi.values[0], psi.values[1]);
    return [q](Rng& rng) { return Theta{q.sample(rng)}; };
}

PsiPoint BetaPsiMapping::prior_psi() const {
    PsiPoint p;
    p.values.resize(2);
    p.values << 2.0, 1.0;
    return p;
}

ThetaSampler BernoulliPsiMapping::sampler(const PsiPoint& psi) const {
    const double p_high = psi.values[0];
    return [p_high](Rng& rng) {
        const double probs[] = {1.0 - p_high, p_high};
        return Theta{static_cast<double>(rng.categorical(probs))};
    };
}

PsiPoint BernoulliPsiMapping::prior_psi() const {
    PsiPoint p;
    p.values.resize(1);
    p.values[0] = prior_p_high_;
    return p;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::FpoUcbState: return "fpo-ucb-s";
        case Method::FpoUcbAction: return "fpo-ucb-a";
        case Method::Naive: return "naive";
        case Method::Enum: return "enum";
        case Method::Random: return "random";
        case Method::Fixed: return "fixed";
        case Method::Epopt: return "epopt";
    }
    return "unknown";
}

std::optional<Method> parse_method(const std::string& name) {
    for (Method m : {Method::FpoUcbState, Method::FpoUcbAction, Method::Naive, Method::Enum,
                     Method::Random, Method::Fixed, Method::Epopt}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

std::vector<std::size_t> epopt_retained_indices(const std::vector<double>& returns,
                                                double epsilon, bool keep_high) {
    if (returns.empty()) {
        throw std::invalid_argument("epopt_retained_indices: empty batch");
    }
    if (!(epsilon > 0.0) || epsilon > 1.0) {
        throw std::invalid_argument("epopt_retained_indices: epsilon must lie in (0, 1]");
    }
    std::vector<double> sorted = returns;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const std::size_t rank =
        std::min(n, static_cast<std::size_t>(std::ceil(epsilon * static_cast<double>(n))));
    // Nearest-rank epsilon quantile; the high-reward variant keeps the
    // trajectories at or above it instead of at or below.
    const double threshold = sorted[rank - 1];

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        if (keep_high ? returns[i] >= threshold : returns[i] <= threshold) {
            kept.push_back(i);
        }
    }
    if (kept.empty()) {
        // Cannot happen with a finite batch, but the contract is explicit:
        // fall back to the single worst (or best) trajectory.
        const auto it = keep_high ? std::max_element(returns.begin(), returns.end())
                                  : std::min_element(returns.begin(), returns.end());
        kept.push_back(static_cast<std::size_t>(it - returns.begin()));
    }
    return kept;
}

namespace {

std::unique_ptr<PsiMapping> make_psi_mapping(const Environment& env) {
    if (const auto* cliff = dynamic_cast<const CliffWalker*>(&env)) {
        (void)cliff;
        return std::make_unique<BetaPsiMapping>();
    }
    const ThetaSupport ts = env.theta_support();
    if (ts.discrete && ts.values.size() == 2) {
        return std::make_unique<BernoulliPsiMapping>(ts.probs[1]);
    }
    throw std::invalid_argument("make_psi_mapping: unsupported environment");
}

ThetaSampler prior_sampler(const Environment& env) {
    return [&env](Rng& rng) { return env.sample_prior(rng); };
}

ThetaSampler point_sampler(double value) {
    return [value](Rng&) { return Theta{value}; };
}

}  // namespace

Trainer::Trainer(std::shared_ptr<const Environment> env, TrainerOptions options,
                 std::uint64_t seed)
    : env_(std::move(env)), options_(std::move(options)), seed_(seed),
      state_{GaussianMlpPolicy(env_->state_dim(), env_->action_dim(), options_.policy_hidden)} {
    mapping_ = make_psi_mapping(*env_);
    const PsiBounds bounds = mapping_->bounds();

    if (options_.method == Method::Enum && !env_->theta_support().discrete) {
        throw std::invalid_argument("Trainer: enum requires a discrete theta support");
    }
    if (options_.method == Method::Fixed) {
        if (static_cast<int>(options_.fixed_psi.size()) != bounds.dim()) {
            throw std::invalid_argument("Trainer: fixed method needs a psi of matching dimension");
        }
        PsiPoint p;
        p.values = Eigen::Map<const Eigen::VectorXd>(options_.fixed_psi.data(),
                                                     options_.fixed_psi.size());
        if (!bounds.contains(p)) {
            throw std::invalid_argument("Trainer: fixed psi outside bounds");
        }
    }
    if (options_.method == Method::Epopt &&
        (!(options_.epopt_epsilon > 0.0) || options_.epopt_epsilon > 1.0)) {
        throw std::invalid_argument("Trainer: epopt epsilon must lie in (0, 1]");
    }

    Rng init_rng = Rng(seed_).substream(3);
    state_.policy.init_params(init_rng);

    state_.hypers = HyperBounds::for_psi_box(bounds).defaults();
    state_.hypers.iter_scale = 1.0 / std::max(1, options_.total_iterations);

    // J(pi_0) and its fingerprint seed the first surrogate row and the
    // history; psi_0 is the method's opening choice.
    Rng eval_rng = phase_rng(0, kEval);
    const JEstimate j0 = evaluate_j(eval_rng);
    state_.last_fingerprint = fingerprint_of(j0.rollouts, 0);
    state_.j_history.push_back(j0.j);

    PsiPoint psi0;
    if (!options_.initial_psi.empty() && options_.method != Method::Fixed) {
        if (static_cast<int>(options_.initial_psi.size()) != bounds.dim()) {
            throw std::invalid_argument("Trainer: initial_psi dimension mismatch");
        }
        psi0.values = Eigen::Map<const Eigen::VectorXd>(options_.initial_psi.data(),
                                                        options_.initial_psi.size());
        if (!bounds.contains(psi0)) {
            throw std::invalid_argument("Trainer: initial_psi outside bounds");
        }
    } else {
        switch (options_.method) {
            case Method::FpoUcbState:
            case Method::FpoUcbAction:
            case Method::Random: {
                Rng acq_rng = phase_rng(0, kAcquire);
                psi0 = bounds.sample(acq_rng);
                break;
            }
            case Method::Fixed: {
                psi0.values = Eigen::Map<const Eigen::VectorXd>(options_.fixed_psi.data(),
                                                                options_.fixed_psi.size());
                break;
            }
            default:
                psi0 = mapping_->prior_psi();
        }
    }
    state_.psi_history.push_back(std::move(psi0));
}

Rng Trainer::phase_rng(int iteration, Phase phase) const {
    return phase_stream(seed_, iteration, phase);
}

JEstimate Trainer::evaluate_j(Rng& rng) const {
    const ThetaSupport ts = env_->theta_support();
    if (ts.discrete) {
        return j_exhaustive(*env_, state_.policy, ts.values, ts.probs,
                            options_.quadrature.m_discrete, rng);
    }
    const Environment* env = env_.get();
    return j_quadrature(
        *env_, state_.policy, [env](double t) { return env->prior_pdf(t); }, ts.lo, ts.hi,
        options_.quadrature, rng);
}

Fingerprint Trainer::fingerprint_of(const std::vector<Trajectory>& rollouts,
                                    int iteration) const {
    const FingerprintMode mode = options_.method == Method::FpoUcbAction
                                     ? FingerprintMode::Action
                                     : FingerprintMode::State;
    return fit_fingerprint(rollouts, mode, iteration);
}

IterationRecord Trainer::finish_iteration(int n, const PsiPoint& psi_used,
                                          const std::vector<Trajectory>& batch,
                                          std::span<const AdvantageGroup> groups,
                                          const Eigen::VectorXd& gradient) {
    const UpdateResult upd = kl_constrained_update(state_.policy, gradient, groups,
                                                   options_.polgrad);
    state_.policy.set_params(upd.params);
    state_.baseline = fit_baseline(batch, options_.polgrad, env_->horizon());

    Rng eval_rng = phase_rng(n, kEval);
    const JEstimate jres = evaluate_j(eval_rng);
    state_.last_fingerprint = fingerprint_of(jres.rollouts, n);
    state_.j_history.push_back(jres.j);
    state_.iteration = n;

    IterationRecord rec;
    rec.iteration = n;
    rec.psi = psi_used.values;
    rec.mean_theta = mapping_->mean_theta(psi_used);
    rec.j = jres.j;
    rec.j_converged = jres.converged;
    rec.fingerprint = state_.last_fingerprint;
    rec.kl = upd.kl;
    rec.improvement = upd.improvement;
    rec.accepted = upd.status == UpdateStatus::Accepted;
    rec.gradient = gradient;
    return rec;
}

IterationRecord Trainer::fpo_iteration(int n) {
    const PsiPoint psi_prev = state_.psi_history.back();
    const Fingerprint fingerprint_prev = state_.last_fingerprint;

    const Rng collect_rng = phase_rng(n, kCollect);
    const std::vector<Trajectory> batch =
        collect_batch(*env_, state_.policy, mapping_->sampler(psi_prev),
                      options_.polgrad.batch_size, collect_rng);
    const AdvantageResult adv =
        compute_advantages(batch, state_.baseline, options_.polgrad, env_->horizon());
    const Eigen::VectorXd g = policy_gradient(state_.policy, batch, adv.advantages);
    const AdvantageGroup group{&batch, &adv.advantages, 1.0};

    IterationRecord rec =
        finish_iteration(n, psi_prev, batch, std::span<const AdvantageGroup>(&group, 1), g);

    // The new surrogate row pairs the psi just trained under with the
    // fingerprint of the policy that entered the update (iteration n-1).
    GPInput row;
    row.psi = psi_prev;
    row.iteration = n - 1;
    row.fingerprint = options_.pair_updated_fingerprint ? state_.last_fingerprint
                                                        : fingerprint_prev;
    state_.gp_data.add(std::move(row), rec.j);

    Rng acq_rng = phase_rng(n, kAcquire);
    const PsiBounds bounds = mapping_->bounds();
    if (state_.gp_data.size() >= 3) {
        Rng fit_rng = acq_rng.substream(0);
        state_.hypers = fit_hypers(state_.gp_data, HyperBounds::for_psi_box(bounds), fit_rng,
                                   1.0 / std::max(1, options_.total_iterations));
    }
    PsiPoint psi_next;
    if (psi_stub_) {
        psi_next = psi_stub_();
    } else {
        Rng select_rng = acq_rng.substream(1);
        psi_next = select_psi(state_.gp_data, state_.hypers, state_.last_fingerprint, n, bounds,
                              options_.acquisition, select_rng);
    }
    state_.psi_history.push_back(std::move(psi_next));
    return rec;
}

IterationRecord Trainer::naive_iteration(int n) {
    const PsiPoint psi = state_.psi_history.back();  // the prior's parameters
    const Rng collect_rng = phase_rng(n, kCollect);
    const std::vector<Trajectory> batch = collect_batch(
        *env_, state_.policy, prior_sampler(*env_), options_.polgrad.batch_size, collect_rng);
    const AdvantageResult adv =
        compute_advantages(batch, state_.baseline, options_.polgrad, env_->horizon());
    const Eigen::VectorXd g = policy_gradient(state_.policy, batch, adv.advantages);
    const AdvantageGroup group{&batch, &adv.advantages, 1.0};

    IterationRecord rec =
        finish_iteration(n, psi, batch, std::span<const AdvantageGroup>(&group, 1), g);
    state_.psi_history.push_back(psi);
    return rec;
}

IterationRecord Trainer::enum_iteration(int n) {
    const ThetaSupport ts = env_->theta_support();
    const int L = static_cast<int>(ts.values.size());
    const int sub_size = (options_.polgrad.batch_size + L - 1) / L;
    const Rng collect_rng = phase_rng(n, kCollect);

    // Independent estimate per support point, then probability-weighted. The
    // sub-batches share episode substreams, so matched noise cancels in the
    // weighted combination.
    std::vector<std::vector<Trajectory>> subs(L);
    std::vector<AdvantageResult> advs(L);
    std::vector<AdvantageGroup> groups(L);
    std::vector<std::vector<Eigen::VectorXd>*> sets(L);
    for (int l = 0; l < L; ++l) {
        subs[l] = collect_batch(*env_, state_.policy, point_sampler(ts.values[l]), sub_size,
                                collect_rng);
        advs[l] = compute_advantages(subs[l], state_.baseline, options_.polgrad,
                                     env_->horizon(), /*normalize=*/false);
        sets[l] = &advs[l].advantages;
    }
    // One shared normalisation scale across the support keeps the relative
    // magnitude of a rare theta's advantages intact under its small weight.
    normalize_advantages_weighted(sets, ts.probs);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(state_.policy.param_count());
    for (int l = 0; l < L; ++l) {
        groups[l] = AdvantageGroup{&subs[l], &advs[l].advantages, ts.probs[l]};
        g += ts.probs[l] * policy_gradient(state_.policy, subs[l], advs[l].advantages);
    }

    std::vector<Trajectory> combined;
    for (const auto& sub : subs) {
        combined.insert(combined.end(), sub.begin(), sub.end());
    }

    IterationRecord rec = finish_iteration(n, state_.psi_history.back(), combined,
                                           std::span<const AdvantageGroup>(groups), g);
    state_.psi_history.push_back(state_.psi_history.back());
    return rec;
}

IterationRecord Trainer::random_iteration(int n) {
    const PsiPoint psi = state_.psi_history.back();
    const Rng collect_rng = phase_rng(n, kCollect);
    const std::vector<Trajectory> batch =
        collect_batch(*env_, state_.policy, mapping_->sampler(psi),
                      options_.polgrad.batch_size, collect_rng);
    const AdvantageResult adv =
        compute_advantages(batch, state_.baseline, options_.polgrad, env_->horizon());
    const Eigen::VectorXd g = policy_gradient(state_.policy, batch, adv.advantages);
    const AdvantageGroup group{&batch, &adv.advantages, 1.0};

    IterationRecord rec =
        finish_iteration(n, psi, batch, std::span<const AdvantageGroup>(&group, 1), g);
    Rng acq_rng = phase_rng(n, kAcquire);
    state_.psi_history.push_back(mapping_->bounds().sample(acq_rng));
    return rec;
}

IterationRecord Trainer::fixed_iteration(int n) {
    const PsiPoint psi = state_.psi_history.back();
    const Rng collect_rng = phase_rng(n, kCollect);
    const std::vector<Trajectory> batch =
        collect_batch(*env_, state_.policy, mapping_->sampler(psi),
                      options_.polgrad.batch_size, collect_rng);
    const AdvantageResult adv =
        compute_advantages(batch, state_.baseline, options_.polgrad, env_->horizon());
    const Eigen::VectorXd g = policy_gradient(state_.policy, batch, adv.advantages);
    const AdvantageGroup group{&batch, &adv.advantages, 1.0};

    IterationRecord rec =
        finish_iteration(n, psi, batch, std::span<const AdvantageGroup>(&group, 1), g);
    state_.psi_history.push_back(psi);
    return rec;
}

IterationRecord Trainer::epopt_iteration(int n) {
    const PsiPoint psi = state_.psi_history.back();
    const Rng collect_rng = phase_rng(n, kCollect);
    std::vector<Trajectory> batch = collect_batch(
        *env_, state_.policy, prior_sampler(*env_), options_.polgrad.batch_size, collect_rng);

    std::vector<Trajectory> retained;
    if (n >= options_.epopt_rejection_start_iter) {
        std::vector<double> returns;
        returns.reserve(batch.size());
        for (const auto& traj : batch) returns.push_back(traj.undiscounted_return());
        for (std::size_t idx :
             epopt_retained_indices(returns, options_.epopt_epsilon, options_.epopt_keep_high)) {
            retained.push_back(std::move(batch[idx]));
        }
    } else {
        retained = std::move(batch);
    }

    const AdvantageResult adv =
        compute_advantages(retained, state_.baseline, options_.polgrad, env_->horizon());
    const Eigen::VectorXd g = policy_gradient(state_.policy, retained, adv.advantages);
    const AdvantageGroup group{&retained, &adv.advantages, 1.0};

    IterationRecord rec =
        finish_iteration(n, psi, retained, std::span<const AdvantageGroup>(&group, 1), g);
    state_.psi_history.push_back(psi);
    return rec;
}

IterationRecord Trainer::step() {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = state_.iteration + 1;
    IterationRecord rec;
    switch (options_.method) {
        case Method::FpoUcbState:
        case Method::FpoUcbAction:
            rec = fpo_iteration(n);
            break;
        case Method::Naive:
            rec = naive_iteration(n);
            break;
        case Method::Enum:
            rec = enum_iteration(n);
            break;
        case Method::Random:
            rec = random_iteration(n);
            break;
        case Method::Fixed:
            rec = fixed_iteration(n);
            break;
        case Method::Epopt:
            rec = epopt_iteration(n);
            break;
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace fpo
