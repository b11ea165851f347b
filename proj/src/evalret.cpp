#include "fpo/evalret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fpo/polgrad.hpp"

namespace fpo {

namespace {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule,
// for the interval (-1, 1); positive half by symmetry (QUADPACK dqk15).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    if (!(a < b)) {
        throw std::invalid_argument("gk15: requires a < b");
    }
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const auto eval = [&](double x) {
        const double v = f(x);
        if (!std::isfinite(v)) {
            throw std::runtime_error("gk15: integrand returned a non-finite value");
        }
        return v;
    };

    const double fc = eval(centre);
    double resk = kWgk[7] * fc;
    double resg = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double fsum = eval(centre - dx) + eval(centre + dx);
        resk += kWgk[j] * fsum;
        if (j % 2 == 1) {  // odd positions carry the embedded Gauss nodes
            resg += kWg[j / 2] * fsum;
        }
    }
    GkResult out;
    out.estimate = resk * half;
    out.error = std::abs((resk - resg) * half);
    return out;
}

AdaptiveResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_subdivisions) {
    struct Segment {
        double a, b, estimate, error;
    };
    std::vector<Segment> segments;
    {
        const GkResult r = gk15(f, a, b);
        segments.push_back({a, b, r.estimate, r.error});
    }

    AdaptiveResult out;
    for (int i = 0; i <= max_subdivisions; ++i) {
        double total = 0.0;
        double err = 0.0;
        for (const auto& s : segments) {
            total += s.estimate;
            err += s.error;
        }
        out.estimate = total;
        out.error = err;
        out.subdivisions = i;
        if (err <= std::max(abs_tol, rel_tol * std::abs(total))) {
            out.converged = true;
            return out;
        }
        if (i == max_subdivisions) break;

        auto worst = std::max_element(
            segments.begin(), segments.end(),
            [](const Segment& x, const Segment& y) { return x.error < y.error; });
        const Segment seg = *worst;
        segments.erase(worst);
        const double mid = 0.5 * (seg.a + seg.b);
        const GkResult left = gk15(f, seg.a, mid);
        const GkResult right = gk15(f, mid, seg.b);
        segments.push_back({seg.a, mid, left.estimate, left.error});
        segments.push_back({mid, seg.b, right.estimate, right.error});
    }
    out.converged = false;
    return out;
}

double expected_return_at_theta(const Environment& env, const GaussianMlpPolicy& policy,
                                const Theta& theta, int m, const Rng& rng) {
    if (m < 1) {
        throw std::invalid_argument("expected_return_at_theta: m must be >= 1");
    }
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        Rng r = rng.substream(i);
        total += rollout(env, policy, theta, env.horizon(), r).undiscounted_return();
    }
    return total / m;
}

JEstimate j_exhaustive(const Environment& env, const GaussianMlpPolicy& policy,
                       std::span<const double> support, std::span<const double> probs, int m,
                       const Rng& rng) {
    if (support.size() != probs.size()) {
        throw std::invalid_argument("j_exhaustive: support/probs length mismatch");
    }
    const double mass = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(mass - 1.0) > 1e-12) {
        throw std::invalid_argument("j_exhaustive: probabilities must sum to 1");
    }
    JEstimate out;
    for (std::size_t l = 0; l < support.size(); ++l) {
        Rng point_rng = rng.substream(l);
        double total = 0.0;
        for (int i = 0; i < m; ++i) {
            Rng r = point_rng.substream(i);
            Trajectory traj =
                rollout(env, policy, Theta{support[l]}, env.horizon(), r);
            total += traj.undiscounted_return();
            out.rollouts.push_back(std::move(traj));
        }
        out.j += probs[l] * (total / m);
    }
    return out;
}

AdaptiveResult j_quadrature_core(const std::function<double(double)>& return_at_theta,
                                 const std::function<double(double)>& prior_pdf, double lo,
                                 double hi, const QuadratureConfig& config) {
    const auto integrand = [&](double theta) {
        return prior_pdf(theta) * return_at_theta(theta);
    };
    return adaptive_gk(integrand, lo, hi, config.rel_tol, config.abs_tol,
                       config.max_subdivisions);
}

JEstimate j_quadrature(const Environment& env, const GaussianMlpPolicy& policy,
                       const std::function<double(double)>& prior_pdf, double lo, double hi,
                       const QuadratureConfig& config, Rng& rng) {
    const int horizon = config.eval_horizon > 0 ? config.eval_horizon : env.horizon();
    // Every node reuses the same seed, so R(theta) is deterministic within
    // this call and varies smoothly with theta (common random numbers).
    const std::uint64_t frozen_seed = rng.next_u64();

    JEstimate out;
    const auto return_at_theta = [&](double theta) {
        Rng node_rng(frozen_seed);
        double total = 0.0;
        for (int i = 0; i < config.trajs_per_node; ++i) {
            Rng r = node_rng.substream(i);
            Trajectory traj = rollout(env, policy, Theta{theta}, horizon, r);
            total += traj.undiscounted_return();
            out.rollouts.push_back(std::move(traj));
        }
        return total / config.trajs_per_node;
    };

    const AdaptiveResult res = j_quadrature_core(return_at_theta, prior_pdf, lo, hi, config);
    out.j = res.estimate;
    out.converged = res.converged;
    return out;
}

}  // namespace fpo
