#include "fpo/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace fpo {

namespace {
constexpr double kLogStdMin = -10.0;
constexpr double kLogStdMax = 2.0;
constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * log(2 pi)
}  // namespace

Fingerprint fit_fingerprint(const std::vector<Trajectory>& trajectories, FingerprintMode mode,
                            int iteration) {
    long count = 0;
    int dim = -1;
    for (const auto& traj : trajectories) {
        const auto& pool =
            mode == FingerprintMode::State ? traj.observations : traj.actions;
        count += static_cast<long>(pool.size());
        if (!pool.empty()) dim = static_cast<int>(pool.front().size());
    }
    if (count == 0) {
        throw std::invalid_argument("fit_fingerprint: no visited states/actions");
    }

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sq_sum = Eigen::VectorXd::Zero(dim);
    for (const auto& traj : trajectories) {
        const auto& pool =
            mode == FingerprintMode::State ? traj.observations : traj.actions;
        for (const auto& x : pool) {
            sum += x;
            sq_sum += x.cwiseProduct(x);
        }
    }

    Fingerprint fp;
    fp.mean = sum / static_cast<double>(count);
    // Population variance: deterministic even for a single sample.
    Eigen::VectorXd var = sq_sum / static_cast<double>(count) - fp.mean.cwiseProduct(fp.mean);
    fp.std = var.cwiseMax(0.0).cwiseSqrt().cwiseMax(kFingerprintStdFloor);
    fp.iteration = iteration;
    return fp;
}

GaussianMlpPolicy::GaussianMlpPolicy(int obs_dim, int action_dim, std::vector<int> hidden)
    : obs_dim_(obs_dim), action_dim_(action_dim) {
    if (obs_dim < 1 || action_dim < 1) {
        throw std::invalid_argument("GaussianMlpPolicy: dimensions must be positive");
    }
    std::vector<int> widths;
    widths.push_back(obs_dim);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(action_dim);

    int offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        LayerView view;
        view.in = widths[l];
        view.out = widths[l + 1];
        view.w_offset = offset;
        offset += view.in * view.out;
        view.b_offset = offset;
        offset += view.out;
        layers_.push_back(view);
    }
    log_std_offset_ = offset;
    params_ = Eigen::VectorXd::Zero(offset + action_dim);
}

Eigen::Map<const Eigen::MatrixXd> GaussianMlpPolicy::weight(const LayerView& l) const {
    return {params_.data() + l.w_offset, l.out, l.in};
}

Eigen::Map<const Eigen::VectorXd> GaussianMlpPolicy::bias(const LayerView& l) const {
    return {params_.data() + l.b_offset, l.out};
}

void GaussianMlpPolicy::set_params(const Eigen::VectorXd& p) {
    if (p.size() != params_.size()) {
        throw std::invalid_argument("GaussianMlpPolicy::set_params: size mismatch");
    }
    if (!p.allFinite()) {
        throw std::invalid_argument("GaussianMlpPolicy::set_params: non-finite parameters");
    }
    params_ = p;
    params_.tail(action_dim_) =
        params_.tail(action_dim_).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

void GaussianMlpPolicy::init_params(Rng& rng) {
    for (const auto& l : layers_) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
        for (int i = 0; i < l.in * l.out; ++i) {
            params_[l.w_offset + i] = rng.uniform(-scale, scale);
        }
        params_.segment(l.b_offset, l.out).setZero();
    }
    params_.tail(action_dim_).setZero();
}

GaussianMlpPolicy::Forward GaussianMlpPolicy::forward(const Eigen::VectorXd& obs) const {
    Forward f;
    f.post.reserve(layers_.size() + 1);
    f.post.push_back(obs);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = weight(layers_[l]) * f.post.back() + bias(layers_[l]);
        if (l + 1 < layers_.size()) {
            z = z.array().tanh();
        }
        f.post.push_back(std::move(z));
    }
    return f;
}

Eigen::VectorXd GaussianMlpPolicy::mean(const Eigen::VectorXd& obs) const {
    return forward(obs).post.back();
}

Eigen::VectorXd GaussianMlpPolicy::log_std() const { return params_.tail(action_dim_); }

Eigen::VectorXd GaussianMlpPolicy::action_std() const {
    return params_.tail(action_dim_).array().exp();
}

Eigen::VectorXd GaussianMlpPolicy::act(const Eigen::VectorXd& obs, Rng& rng) const {
    Eigen::VectorXd a = mean(obs);
    const Eigen::VectorXd sigma = action_std();
    for (int d = 0; d < action_dim_; ++d) {
        a[d] += sigma[d] * rng.normal();
    }
    return a;
}

double GaussianMlpPolicy::log_prob(const Eigen::VectorXd& obs,
                                   const Eigen::VectorXd& action) const {
    const Eigen::VectorXd mu = mean(obs);
    const Eigen::VectorXd ls = log_std();
    double lp = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
        const double z = (action[d] - mu[d]) * std::exp(-ls[d]);
        lp += -0.5 * z * z - ls[d] - kHalfLog2Pi;
    }
    return lp;
}

Eigen::VectorXd GaussianMlpPolicy::grad_log_prob(const Eigen::VectorXd& obs,
                                                 const Eigen::VectorXd& action) const {
    const Forward f = forward(obs);
    const Eigen::VectorXd& mu = f.post.back();
    const Eigen::VectorXd ls = log_std();

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    Eigen::VectorXd z(action_dim_);
    for (int d = 0; d < action_dim_; ++d) {
        z[d] = (action[d] - mu[d]) * std::exp(-ls[d]);
        // d log p / d log_std = z^2 - 1
        grad[log_std_offset_ + d] = z[d] * z[d] - 1.0;
    }

    // d log p / d mu = z / sigma, backpropagated through the mean network.
    Eigen::VectorXd g = z.cwiseProduct((-ls).array().exp().matrix());
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& view = layers_[l];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + view.w_offset, view.out, view.in);
        gw += g * f.post[l].transpose();
        grad.segment(view.b_offset, view.out) += g;
        if (l > 0) {
            Eigen::VectorXd upstream = weight(view).transpose() * g;
            // tanh'(x) = 1 - tanh(x)^2, and post[l] is already tanh(x)
            g = upstream.cwiseProduct(
                (1.0 - f.post[l].array().square()).matrix());
        }
    }
    return grad;
}

Eigen::VectorXd GaussianMlpPolicy::mean_jvp(const Eigen::VectorXd& obs,
                                            const Eigen::VectorXd& v) const {
    const Forward f = forward(obs);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(obs_dim_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& view = layers_[l];
        Eigen::Map<const Eigen::MatrixXd> dw(v.data() + view.w_offset, view.out, view.in);
        Eigen::Map<const Eigen::VectorXd> db(v.data() + view.b_offset, view.out);
        Eigen::VectorXd rz = dw * f.post[l] + weight(view) * r + db;
        if (l + 1 < layers_.size()) {
            rz = rz.cwiseProduct((1.0 - f.post[l + 1].array().square()).matrix());
        }
        r = std::move(rz);
    }
    return r;
}

void GaussianMlpPolicy::mean_vjp_accumulate(const Eigen::VectorXd& obs, const Eigen::VectorXd& w,
                                            Eigen::VectorXd& grad) const {
    const Forward f = forward(obs);
    Eigen::VectorXd g = w;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& view = layers_[l];
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + view.w_offset, view.out, view.in);
        gw += g * f.post[l].transpose();
        grad.segment(view.b_offset, view.out) += g;
        if (l > 0) {
            Eigen::VectorXd upstream = weight(view).transpose() * g;
            g = upstream.cwiseProduct((1.0 - f.post[l].array().square()).matrix());
        }
    }
}

double GaussianMlpPolicy::kl_from(const GaussianMlpPolicy& old_policy,
                                  const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd mu_old = old_policy.mean(obs);
    const Eigen::VectorXd mu_new = mean(obs);
    const Eigen::VectorXd ls_old = old_policy.log_std();
    const Eigen::VectorXd ls_new = log_std();
    double kl = 0.0;
    for (int d = 0; d < action_dim_; ++d) {
        const double var_old = std::exp(2.0 * ls_old[d]);
        const double var_new = std::exp(2.0 * ls_new[d]);
        const double dm = mu_old[d] - mu_new[d];
        kl += ls_new[d] - ls_old[d] + (var_old + dm * dm) / (2.0 * var_new) - 0.5;
    }
    return kl;
}

}  // namespace fpo
