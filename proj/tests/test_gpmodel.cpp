#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fpo/evalret.hpp"
#include "fpo/gpmodel.hpp"

using namespace fpo;

namespace {

Fingerprint make_fp(std::vector<double> mean, std::vector<double> std, int iteration = 0) {
    Fingerprint fp;
    fp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    fp.std = Eigen::Map<const Eigen::VectorXd>(std.data(), std.size());
    fp.iteration = iteration;
    return fp;
}

GPInput make_input(std::vector<double> psi, int iteration, Fingerprint fp) {
    GPInput x;
    x.psi.values = Eigen::Map<const Eigen::VectorXd>(psi.data(), psi.size());
    x.iteration = iteration;
    x.fingerprint = std::move(fp);
    return x;
}

GPHypers unit_hypers(int psi_dim) {
    GPHypers h;
    h.signal_var = 1.0;
    h.lengthscales_psi = Eigen::VectorXd::Ones(psi_dim);
    h.lengthscale_iter = 1.0;
    h.lengthscale_fpr = 1.0;
    h.noise_var = 1e-2;
    h.iter_scale = 1.0;
    return h;
}

/// Numerical-integration oracle: squared Hellinger distance between diagonal
/// Gaussians is 1 - prod_i integral sqrt(p_i q_i).
double hellinger_sq_oracle(const Fingerprint& a, const Fingerprint& b) {
    double bc = 1.0;
    for (int i = 0; i < a.mean.size(); ++i) {
        const double m1 = a.mean[i], s1 = a.std[i];
        const double m2 = b.mean[i], s2 = b.std[i];
        const auto integrand = [&](double x) {
            const double p = std::exp(-0.5 * (x - m1) * (x - m1) / (s1 * s1)) /
                             (s1 * std::sqrt(2.0 * M_PI));
            const double q = std::exp(-0.5 * (x - m2) * (x - m2) / (s2 * s2)) /
                             (s2 * std::sqrt(2.0 * M_PI));
            return std::sqrt(p * q);
        };
        // Integrate piecewise with breakpoints at both means: sqrt(p q)
        // peaks between them and would otherwise hide from the first
        // coarse pass over a wide interval.
        std::vector<double> cuts = {std::min(m1 - 12.0 * s1, m2 - 12.0 * s2),
                                    std::min(m1, m2), std::max(m1, m2),
                                    std::max(m1 + 12.0 * s1, m2 + 12.0 * s2)};
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            if (cuts[k + 1] > cuts[k]) {
                integral += adaptive_gk(integrand, cuts[k], cuts[k + 1], 1e-13, 1e-13, 60)
                                .estimate;
            }
        }
        bc *= integral;
    }
    return 1.0 - bc;
}

}  // namespace

TEST_CASE("hellinger_sq: identical fingerprints have zero distance") {
    const Fingerprint f = make_fp({0.3, -1.0}, {0.5, 2.0});
    CHECK(hellinger_sq(f, f) == 0.0);
}

TEST_CASE("hellinger_sq: unit-variance pair with separated means, closed form") {
    const Fingerprint a = make_fp({0.0}, {1.0});
    const Fingerprint b = make_fp({2.0}, {1.0});
    CHECK(hellinger_sq(a, b) == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
    CHECK(hellinger_sq(a, b) == doctest::Approx(0.39347).epsilon(1e-4));
}

TEST_CASE("hellinger_sq: widely separated means approach one from below") {
    const Fingerprint a = make_fp({0.0}, {1.0});
    double prev = 0.0;
    for (double gap : {5.0, 10.0, 20.0, 40.0}) {
        const Fingerprint b = make_fp({gap}, {1.0});
        const double h = hellinger_sq(a, b);
        CHECK(h <= 1.0);
        CHECK(h >= prev);
        prev = h;
    }
    CHECK(prev > 1.0 - 1e-12);
}

TEST_CASE("hellinger_sq matches the integration oracle on 100 random pairs") {
    Rng rng(555);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int dim = 1 + static_cast<int>(rng.next_u64() % 3);
        std::vector<double> m1(dim), s1(dim), m2(dim), s2(dim);
        for (int i = 0; i < dim; ++i) {
            m1[i] = 3.0 * rng.normal();
            m2[i] = 3.0 * rng.normal();
            s1[i] = 0.05 + 2.0 * rng.uniform();
            s2[i] = 0.05 + 2.0 * rng.uniform();
        }
        const Fingerprint a = make_fp(m1, s1);
        const Fingerprint b = make_fp(m2, s2);
        const double closed = hellinger_sq(a, b);
        CHECK(closed >= 0.0);
        CHECK(closed <= 1.0);
        worst = std::max(worst, std::abs(closed - hellinger_sq_oracle(a, b)));
        CHECK(closed == doctest::Approx(hellinger_sq(b, a)).epsilon(1e-15));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("hellinger_sq: dimension mismatch is rejected") {
    CHECK_THROWS_AS(hellinger_sq(make_fp({0.0}, {1.0}), make_fp({0.0, 1.0}, {1.0, 1.0})),
                    std::invalid_argument);
}

TEST_CASE("kernel at zero distance returns the signal variance") {
    const GPInput x = make_input({0.4, 0.8}, 3, make_fp({0.1}, {0.3}));
    GPHypers h = unit_hypers(2);
    h.signal_var = 2.5;
    CHECK(kernel(x, x, h) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("kernel is symmetric at random inputs") {
    Rng rng(77);
    const GPHypers h = unit_hypers(2);
    for (int i = 0; i < 20; ++i) {
        const GPInput a = make_input({rng.uniform(), rng.uniform()},
                                     static_cast<int>(rng.next_u64() % 10),
                                     make_fp({rng.normal()}, {0.1 + rng.uniform()}));
        const GPInput b = make_input({rng.uniform(), rng.uniform()},
                                     static_cast<int>(rng.next_u64() % 10),
                                     make_fp({rng.normal()}, {0.1 + rng.uniform()}));
        CHECK(kernel(a, b, h) == doctest::Approx(kernel(b, a, h)).epsilon(1e-15));
    }
}

TEST_CASE("gram matrix of random inputs is positive definite (Cholesky oracle)") {
    Rng rng(88);
    const GPHypers h = unit_hypers(1);
    std::vector<GPInput> xs;
    for (int i = 0; i < 10; ++i) {
        xs.push_back(make_input({rng.uniform()}, i, make_fp({rng.normal()}, {0.2 + rng.uniform()})));
    }
    Eigen::MatrixXd K(10, 10);
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) K(i, j) = kernel(xs[i], xs[j], h);
    }
    K.diagonal().array() += 1e-8;
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("posterior: noise-free single observation interpolates exactly") {
    GPDataset data;
    const GPInput x = make_input({0.5}, 0, make_fp({0.0}, {1.0}));
    data.add(x, 7.25);
    GPHypers h = unit_hypers(1);
    h.noise_var = 1e-12;
    const Posterior p = posterior(data, h, x);
    CHECK(p.mu == doctest::Approx(7.25).epsilon(1e-6));
    CHECK(p.var < 1e-6);
}

TEST_CASE("posterior: far query reverts to the output mean and prior variance") {
    GPDataset data;
    // Output std is exactly 1 so de-normalised variance equals signal_var.
    data.add(make_input({0.1}, 0, make_fp({0.0}, {1.0})), 1.0);
    data.add(make_input({0.2}, 0, make_fp({0.0}, {1.0})), 3.0);
    const GPHypers h = unit_hypers(1);
    const GPInput far = make_input({500.0}, 0, make_fp({0.0}, {1.0}));
    const Posterior p = posterior(data, h, far);
    CHECK(p.mu == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(p.var == doctest::Approx(h.signal_var).epsilon(1e-9));
}

TEST_CASE("posterior: two-point dataset against the hand 2x2 inverse") {
    GPDataset data;
    const GPInput x1 = make_input({0.2}, 0, make_fp({0.0}, {1.0}));
    const GPInput x2 = make_input({0.9}, 1, make_fp({0.5}, {1.5}));
    const double y1 = -3.0, y2 = 5.0;
    data.add(x1, y1);
    data.add(x2, y2);
    GPHypers h = unit_hypers(1);
    h.signal_var = 1.7;
    h.noise_var = 0.05;

    const GPInput q = make_input({0.55}, 1, make_fp({0.2}, {1.2}));

    // Oracle: normalise outputs, invert the 2x2 system explicitly.
    const double mean = 0.5 * (y1 + y2);
    const double sd = std::sqrt((std::pow(y1 - mean, 2) + std::pow(y2 - mean, 2)) / 2.0);
    const Eigen::Vector2d y((y1 - mean) / sd, (y2 - mean) / sd);
    Eigen::Matrix2d K;
    K << kernel(x1, x1, h) + h.noise_var, kernel(x1, x2, h), kernel(x2, x1, h),
        kernel(x2, x2, h) + h.noise_var;
    const Eigen::Matrix2d Kinv = K.inverse();
    const Eigen::Vector2d k(kernel(q, x1, h), kernel(q, x2, h));
    const double mu = mean + sd * k.dot(Kinv * y);
    const double var = sd * sd * (kernel(q, q, h) - k.dot(Kinv * k));

    const Posterior p = posterior(data, h, q);
    CHECK(std::abs(p.mu - mu) < 1e-10);
    CHECK(std::abs(p.var - var) < 1e-10);
}

TEST_CASE("posterior variance is never negative across random queries") {
    Rng rng(99);
    GPDataset data;
    for (int i = 0; i < 25; ++i) {
        data.add(make_input({rng.uniform()}, i, make_fp({rng.normal()}, {0.5})),
                 rng.normal() * 10.0);
    }
    GPHypers h = unit_hypers(1);
    h.noise_var = 1e-6;
    const GaussianProcess gp(data, h);
    for (int i = 0; i < 50; ++i) {
        const GPInput q = make_input({rng.uniform()}, static_cast<int>(rng.next_u64() % 25),
                                     make_fp({rng.normal()}, {0.5}));
        CHECK(gp.posterior(q).var >= 0.0);
    }
}

TEST_CASE("fit_hypers: fewer than three observations returns mid-bounds defaults") {
    GPDataset data;
    data.add(make_input({0.5}, 0, make_fp({0.0}, {1.0})), 1.0);
    HyperBounds bounds;
    bounds.psi_lo = Eigen::VectorXd::Constant(1, 0.01);
    bounds.psi_hi = Eigen::VectorXd::Constant(1, 10.0);
    Rng rng(1);
    const GPHypers h = fit_hypers(data, bounds, rng);
    const GPHypers d = bounds.defaults();
    CHECK(h.signal_var == doctest::Approx(d.signal_var));
    CHECK(h.noise_var == doctest::Approx(d.noise_var));
    CHECK(h.lengthscales_psi[0] == doctest::Approx(d.lengthscales_psi[0]));
}

TEST_CASE("fit_hypers: duplicated inputs with different outputs force noise up") {
    GPDataset data;
    const GPInput x = make_input({0.5}, 0, make_fp({0.0}, {1.0}));
    for (int i = 0; i < 6; ++i) {
        data.add(x, i % 2 == 0 ? 1.0 : -1.0);
    }
    HyperBounds bounds;
    bounds.psi_lo = Eigen::VectorXd::Constant(1, 0.01);
    bounds.psi_hi = Eigen::VectorXd::Constant(1, 10.0);
    Rng rng(2);
    const GPHypers h = fit_hypers(data, bounds, rng);
    // Pure interpolation is impossible; the likelihood pushes noise toward
    // the sample variance (1 in normalised units).
    CHECK(h.noise_var > 0.1);
}

TEST_CASE("fit_hypers: argmax beats every restart's start point") {
    Rng rng(3);
    GPDataset data;
    for (int i = 0; i < 12; ++i) {
        const double psi = rng.uniform();
        data.add(make_input({psi}, i, make_fp({0.0}, {1.0})), std::sin(6.0 * psi));
    }
    HyperBounds bounds;
    bounds.psi_lo = Eigen::VectorXd::Constant(1, 0.01);
    bounds.psi_hi = Eigen::VectorXd::Constant(1, 10.0);
    Rng fit_rng(4);
    const GPHypers best = fit_hypers(data, bounds, fit_rng);
    const double best_lml = GaussianProcess(data, best).log_marginal_likelihood();
    CHECK(best_lml >=
          GaussianProcess(data, bounds.defaults()).log_marginal_likelihood() - 1e-9);

    // Random hypers drawn from the same box must not beat the optimum found.
    Rng probe(5);
    for (int i = 0; i < 20; ++i) {
        GPHypers h = bounds.defaults();
        h.signal_var = std::exp(probe.uniform(std::log(bounds.signal_var_lo),
                                              std::log(bounds.signal_var_hi)));
        h.noise_var = std::exp(
            probe.uniform(std::log(bounds.noise_lo), std::log(bounds.noise_hi)));
        h.lengthscales_psi[0] = std::exp(
            probe.uniform(std::log(bounds.psi_lo[0]), std::log(bounds.psi_hi[0])));
        double lml;
        try {
            lml = GaussianProcess(data, h).log_marginal_likelihood();
        } catch (const std::exception&) {
            continue;
        }
        CHECK(best_lml >= lml - 1e-6);
    }
}

TEST_CASE("fit_hypers recovers the noise scale of a known generator") {
    // Sample from a GP prior with known hypers via the Cholesky factor.
    GPHypers truth = unit_hypers(1);
    truth.signal_var = 4.0;
    truth.lengthscales_psi[0] = 0.3;
    truth.noise_var = 0.04;

    Rng rng(6);
    std::vector<GPInput> xs;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        xs.push_back(make_input({rng.uniform()}, 0, make_fp({0.0}, {1.0})));
    }
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) K(i, j) = kernel(xs[i], xs[j], truth);
    }
    K.diagonal().array() += truth.noise_var;
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    REQUIRE(llt.info() == Eigen::Success);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    const Eigen::VectorXd y = Eigen::MatrixXd(llt.matrixL()) * z;

    GPDataset data;
    for (int i = 0; i < n; ++i) data.add(xs[i], y[i]);

    HyperBounds bounds;
    bounds.psi_lo = Eigen::VectorXd::Constant(1, 0.01);
    bounds.psi_hi = Eigen::VectorXd::Constant(1, 10.0);
    Rng fit_rng(7);
    const GPHypers fitted = fit_hypers(data, bounds, fit_rng);

    // Outputs are standardised before fitting, so compare the noise-to-signal
    // ratio on both sides, within one order of magnitude.
    const double truth_ratio = truth.noise_var / truth.signal_var;
    const double fitted_ratio = fitted.noise_var / fitted.signal_var;
    CHECK(fitted_ratio > truth_ratio / 10.0);
    CHECK(fitted_ratio < truth_ratio * 10.0);
}

TEST_CASE("gp rejects invalid datasets") {
    GPDataset empty;
    CHECK_THROWS_AS(GaussianProcess(empty, unit_hypers(1)), std::invalid_argument);

    GPDataset bad;
    bad.add(make_input({0.5}, 0, make_fp({0.0}, {1.0})),
            std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(GaussianProcess(bad, unit_hypers(1)), std::invalid_argument);
}
