#include "fpo/gpmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fpo {

double hellinger_sq(const Fingerprint& f1, const Fingerprint& f2) {
    if (f1.mean.size() != f2.mean.size()) {
        throw std::invalid_argument("hellinger_sq: dimension mismatch");
    }
    double log_bc = 0.0;
    for (int i = 0; i < f1.mean.size(); ++i) {
        const double s1 = f1.std[i] * f1.std[i];
        const double s2 = f2.std[i] * f2.std[i];
        const double dm = f1.mean[i] - f2.mean[i];
        log_bc += 0.5 * std::log(2.0 * f1.std[i] * f2.std[i] / (s1 + s2));
        log_bc -= 0.25 * dm * dm / (s1 + s2);
    }
    return std::clamp(1.0 - std::exp(log_bc), 0.0, 1.0);
}

double kernel(const GPInput& x1, const GPInput& x2, const GPHypers& h) {
    if (x1.psi.values.size() != x2.psi.values.size() ||
        x1.psi.values.size() != h.lengthscales_psi.size()) {
        throw std::invalid_argument("kernel: psi dimension mismatch");
    }
    double q = 0.0;
    for (int d = 0; d < x1.psi.values.size(); ++d) {
        const double dx = (x1.psi.values[d] - x2.psi.values[d]) / h.lengthscales_psi[d];
        q += dx * dx;
    }
    const double dn =
        (x1.iteration - x2.iteration) * h.iter_scale / h.lengthscale_iter;
    q += dn * dn;
    q += hellinger_sq(x1.fingerprint, x2.fingerprint) /
         (h.lengthscale_fpr * h.lengthscale_fpr);
    return h.signal_var * std::exp(-0.5 * q);
}

GaussianProcess::GaussianProcess(GPDataset data, GPHypers hypers)
    : data_(std::move(data)), hypers_(std::move(hypers)) {
    const int n = data_.size();
    if (n == 0) {
        throw std::invalid_argument("GaussianProcess: empty dataset");
    }

    Eigen::Map<const Eigen::VectorXd> raw(data_.outputs.data(), n);
    if (!raw.allFinite()) {
        throw std::invalid_argument("GaussianProcess: non-finite outputs");
    }
    y_mean_ = raw.mean();
    const double var = (raw.array() - y_mean_).square().sum() / n;
    y_std_ = var > 1e-24 ? std::sqrt(var) : 1.0;
    Eigen::VectorXd y = (raw.array() - y_mean_) / y_std_;

    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            K(i, j) = kernel(data_.inputs[i], data_.inputs[j], hypers_);
            K(j, i) = K(i, j);
        }
    }
    K.diagonal().array() += hypers_.noise_var;

    // Jitter schedule 1e-8 -> 1e-4 (relative to signal) on Cholesky failure.
    const double scale = std::max(hypers_.signal_var, 1.0);
    bool ok = false;
    for (double jitter : {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
        llt_.compute(K + (jitter * scale) * Eigen::MatrixXd::Identity(n, n));
        if (llt_.info() == Eigen::Success) {
            ok = true;
            break;
        }
    }
    if (!ok) {
        throw std::runtime_error("GaussianProcess: Cholesky failed at maximum jitter");
    }

    alpha_ = llt_.solve(y);
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) {
        log_det += std::log(llt_.matrixL()(i, i));
    }
    lml_ = -0.5 * y.dot(alpha_) - log_det - 0.5 * n * std::log(2.0 * M_PI);
}

Posterior GaussianProcess::posterior(const GPInput& query) const {
    const int n = data_.size();
    Eigen::VectorXd k(n);
    for (int i = 0; i < n; ++i) {
        k[i] = kernel(query, data_.inputs[i], hypers_);
    }
    const double mu_norm = k.dot(alpha_);
    const double var_norm = kernel(query, query, hypers_) - k.dot(llt_.solve(k));
    if (var_norm < -1e-8) {
        throw std::logic_error("GaussianProcess: negative posterior variance");
    }
    Posterior p;
    p.mu = y_mean_ + y_std_ * mu_norm;
    p.var = y_std_ * y_std_ * std::max(var_norm, 0.0);
    return p;
}

Posterior posterior(const GPDataset& data, const GPHypers& hypers, const GPInput& query) {
    return GaussianProcess(data, hypers).posterior(query);
}

HyperBounds HyperBounds::for_psi_box(const PsiBounds& psi) {
    HyperBounds b;
    const Eigen::VectorXd span = psi.hi - psi.lo;
    b.psi_lo = 0.02 * span;
    b.psi_hi = 5.0 * span;
    return b;
}

namespace {

double geo_mid(double lo, double hi) { return std::sqrt(lo * hi); }

}  // namespace

GPHypers HyperBounds::defaults() const {
    GPHypers h;
    h.signal_var = geo_mid(signal_var_lo, signal_var_hi);
    h.lengthscales_psi.resize(psi_lo.size());
    for (int d = 0; d < psi_lo.size(); ++d) {
        h.lengthscales_psi[d] = geo_mid(psi_lo[d], psi_hi[d]);
    }
    h.lengthscale_iter = geo_mid(iter_lo, iter_hi);
    h.lengthscale_fpr = geo_mid(fpr_lo, fpr_hi);
    h.noise_var = geo_mid(noise_lo, noise_hi);
    return h;
}

namespace {

struct HyperVec {
    // log-space view: [signal, psi..., iter, fpr, noise]
    static int dim(int psi_dim) { return psi_dim + 4; }

    static Eigen::VectorXd pack(const GPHypers& h) {
        const int pd = static_cast<int>(h.lengthscales_psi.size());
        Eigen::VectorXd v(dim(pd));
        v[0] = std::log(h.signal_var);
        for (int d = 0; d < pd; ++d) v[1 + d] = std::log(h.lengthscales_psi[d]);
        v[1 + pd] = std::log(h.lengthscale_iter);
        v[2 + pd] = std::log(h.lengthscale_fpr);
        v[3 + pd] = std::log(h.noise_var);
        return v;
    }

    static GPHypers unpack(const Eigen::VectorXd& v, int psi_dim, double iter_scale) {
        GPHypers h;
        h.signal_var = std::exp(v[0]);
        h.lengthscales_psi.resize(psi_dim);
        for (int d = 0; d < psi_dim; ++d) h.lengthscales_psi[d] = std::exp(v[1 + d]);
        h.lengthscale_iter = std::exp(v[1 + psi_dim]);
        h.lengthscale_fpr = std::exp(v[2 + psi_dim]);
        h.noise_var = std::exp(v[3 + psi_dim]);
        h.iter_scale = iter_scale;
        return h;
    }

    static void box(const HyperBounds& b, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
        const int pd = static_cast<int>(b.psi_lo.size());
        lo.resize(dim(pd));
        hi.resize(dim(pd));
        lo[0] = std::log(b.signal_var_lo);
        hi[0] = std::log(b.signal_var_hi);
        for (int d = 0; d < pd; ++d) {
            lo[1 + d] = std::log(b.psi_lo[d]);
            hi[1 + d] = std::log(b.psi_hi[d]);
        }
        lo[1 + pd] = std::log(b.iter_lo);
        hi[1 + pd] = std::log(b.iter_hi);
        lo[2 + pd] = std::log(b.fpr_lo);
        hi[2 + pd] = std::log(b.fpr_hi);
        lo[3 + pd] = std::log(b.noise_lo);
        hi[3 + pd] = std::log(b.noise_hi);
    }
};

}  // namespace

GPHypers fit_hypers(const GPDataset& data, const HyperBounds& bounds, Rng& rng,
                    double iter_scale) {
    GPHypers fallback = bounds.defaults();
    fallback.iter_scale = iter_scale;
    if (data.size() < 3) {
        return fallback;
    }
    const int psi_dim = static_cast<int>(data.inputs.front().psi.values.size());

    Eigen::VectorXd lo, hi;
    HyperVec::box(bounds, lo, hi);

    const auto lml_at = [&](const Eigen::VectorXd& v) -> double {
        try {
            return GaussianProcess(data, HyperVec::unpack(v, psi_dim, iter_scale))
                .log_marginal_likelihood();
        } catch (const std::exception&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    Eigen::VectorXd best = HyperVec::pack(fallback);
    double best_val = lml_at(best);

    constexpr int kRestarts = 8;
    for (int restart = 0; restart <= kRestarts; ++restart) {
        Eigen::VectorXd v(lo.size());
        if (restart == 0) {
            v = HyperVec::pack(fallback);
        } else {
            for (int d = 0; d < v.size(); ++d) v[d] = rng.uniform(lo[d], hi[d]);
        }
        double val = lml_at(v);

        // Coordinate-wise refinement with shrinking log-space steps.
        for (double step : {1.5, 0.6, 0.25}) {
            for (int d = 0; d < v.size(); ++d) {
                for (double dir : {+1.0, -1.0}) {
                    Eigen::VectorXd trial = v;
                    trial[d] = std::clamp(trial[d] + dir * step, lo[d], hi[d]);
                    const double t = lml_at(trial);
                    if (t > val) {
                        val = t;
                        v = trial;
                    }
                }
            }
        }
        if (val > best_val) {
            best_val = val;
            best = v;
        }
    }
    if (!std::isfinite(best_val)) {
        return fallback;
    }
    return HyperVec::unpack(best, psi_dim, iter_scale);
}

}  // namespace fpo
