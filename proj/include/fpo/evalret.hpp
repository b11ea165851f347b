#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fpo/envsim.hpp"
#include "fpo/policy.hpp"
#include "fpo/trajectory.hpp"

namespace fpo {

struct QuadratureConfig {
    double rel_tol = 1e-2;
    double abs_tol = 1.0;  // in return units
    int max_subdivisions = 10;
    int trajs_per_node = 4;
    int m_discrete = 8;     // rollouts per support point for discrete theta
    int eval_horizon = 0;   // 0 = environment horizon
};

struct GkResult {
    double estimate = 0.0;
    double error = 0.0;  // |K15 - G7|
};

/// 15-point Gauss-Kronrod rule on [a, b] with the embedded 7-point Gauss
/// error estimate. Throws std::runtime_error if the integrand returns a
/// non-finite value.
GkResult gk15(const std::function<double(double)>& f, double a, double b);

struct AdaptiveResult {
    double estimate = 0.0;
    double error = 0.0;
    bool converged = true;
    int subdivisions = 0;
};

/// Globally adaptive quadrature: bisects the subinterval with the largest
/// error estimate until the summed error drops below
/// max(abs_tol, rel_tol * |estimate|) or the subdivision budget is spent.
AdaptiveResult adaptive_gk(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol, int max_subdivisions);

/// Mean undiscounted return of m rollouts at a fixed theta.
double expected_return_at_theta(const Environment& env, const GaussianMlpPolicy& policy,
                                const Theta& theta, int m, const Rng& rng);

struct JEstimate {
    double j = 0.0;
    bool converged = true;
    std::vector<Trajectory> rollouts;  // every evaluation rollout, pooled
};

/// J(pi) for discrete theta by exhaustive probability-weighted summation.
JEstimate j_exhaustive(const Environment& env, const GaussianMlpPolicy& policy,
                       std::span<const double> support, std::span<const double> probs, int m,
                       const Rng& rng);

/// J(pi) for continuous theta: adaptive Gauss-Kronrod quadrature of
/// prior_pdf(theta) * R(theta, pi). Rollout noise is frozen for the duration
/// of one call (every node reuses the same seed), making the integrand a
/// deterministic function of theta as the adaptive rule requires.
JEstimate j_quadrature(const Environment& env, const GaussianMlpPolicy& policy,
                       const std::function<double(double)>& prior_pdf, double lo, double hi,
                       const QuadratureConfig& config, Rng& rng);

/// Quadrature core against an arbitrary per-theta return estimate; the
/// environment-backed overload delegates here.
AdaptiveResult j_quadrature_core(const std::function<double(double)>& return_at_theta,
                                 const std::function<double(double)>& prior_pdf, double lo,
                                 double hi, const QuadratureConfig& config);

}  // namespace fpo
