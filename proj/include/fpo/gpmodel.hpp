#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "fpo/policy.hpp"
#include "fpo/psi.hpp"
#include "fpo/rng.hpp"

namespace fpo {

/// One surrogate-model input: the sampling-distribution parameters used for
/// an update, the iteration index, and the fingerprint of the policy that
/// was updated.
struct GPInput {
    PsiPoint psi;
    int iteration = 0;
    Fingerprint fingerprint;
};

struct GPDataset {
    std::vector<GPInput> inputs;
    std::vector<double> outputs;

    int size() const { return static_cast<int>(outputs.size()); }
    void add(GPInput input, double output) {
        inputs.push_back(std::move(input));
        outputs.push_back(output);
    }
};

struct GPHypers {
    double signal_var = 1.0;
    Eigen::VectorXd lengthscales_psi;
    double lengthscale_iter = 0.3;
    double lengthscale_fpr = 0.5;
    double noise_var = 1e-2;
    /// Fixed rescaling of the iteration index (1 / planned iterations) so a
    /// single lengthscale covers runs of any length. Not fitted.
    double iter_scale = 1.0;
};

/// Squared Hellinger distance between two diagonal Gaussians; in [0, 1],
/// zero iff the fingerprints coincide. The iteration field does not enter.
double hellinger_sq(const Fingerprint& f1, const Fingerprint& f2);

/// Product of squared-exponential terms in psi, scaled iteration, and the
/// Hellinger embedding of the fingerprints, under one shared amplitude.
double kernel(const GPInput& x1, const GPInput& x2, const GPHypers& h);

struct Posterior {
    double mu = 0.0;
    double var = 0.0;
};

/// Exact GP regression on standardised outputs. Fitting factorises the Gram
/// matrix once (with an escalating jitter on Cholesky failure); a fitted
/// model is immutable and may be queried concurrently.
class GaussianProcess {
public:
    GaussianProcess(GPDataset data, GPHypers hypers);

    Posterior posterior(const GPInput& query) const;
    double log_marginal_likelihood() const { return lml_; }
    const GPHypers& hypers() const { return hypers_; }
    int size() const { return data_.size(); }

private:
    GPDataset data_;
    GPHypers hypers_;
    double y_mean_ = 0.0;
    double y_std_ = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double lml_ = 0.0;
};

/// Convenience single-query posterior (refactorises every call).
Posterior posterior(const GPDataset& data, const GPHypers& hypers, const GPInput& query);

/// Log-space search box for the hyperparameters.
struct HyperBounds {
    double signal_var_lo = 1e-3, signal_var_hi = 1e3;
    Eigen::VectorXd psi_lo, psi_hi;  // per psi dimension
    double iter_lo = 0.02, iter_hi = 5.0;
    double fpr_lo = 0.05, fpr_hi = 5.0;
    double noise_lo = 1e-4, noise_hi = 1.0;

    static HyperBounds for_psi_box(const PsiBounds& psi);
    /// Geometric midpoint of every interval.
    GPHypers defaults() const;
};

/// Maximises the log marginal likelihood by multi-start coordinate descent
/// in log space (8 random restarts). Returns mid-bounds defaults when fewer
/// than 3 observations are available.
GPHypers fit_hypers(const GPDataset& data, const HyperBounds& bounds, Rng& rng,
                    double iter_scale = 1.0);

}  // namespace fpo
