#include "fpo/acquisition.hpp"

#include <cmath>

namespace fpo {

PsiPoint select_psi(const GPDataset& data, const GPHypers& hypers,
                    const Fingerprint& current_fingerprint, int iteration,
                    const PsiBounds& bounds, const AcquisitionConfig& config, Rng& rng) {
    if (data.size() < 3) {
        return bounds.sample(rng);
    }
    const GaussianProcess gp(data, hypers);

    GPInput query;
    query.iteration = iteration;
    query.fingerprint = current_fingerprint;

    const auto acquisition_at = [&](const PsiPoint& psi) {
        query.psi = psi;
        const Posterior p = gp.posterior(query);
        return ucb(p.mu, std::sqrt(std::max(p.var, 0.0)), config.kappa);
    };

    PsiPoint best = bounds.sample(rng);
    double best_val = acquisition_at(best);
    for (int i = 1; i < config.n_candidates; ++i) {
        PsiPoint cand = bounds.sample(rng);
        const double val = acquisition_at(cand);
        if (val > best_val) {
            best_val = val;
            best = std::move(cand);
        }
    }

    // Coordinate search in a window that shrinks each round.
    for (int round = 0; round < config.n_refine; ++round) {
        const double shrink = std::pow(config.refine_shrink, round + 1);
        for (int d = 0; d < bounds.dim(); ++d) {
            const double width = (bounds.hi[d] - bounds.lo[d]) * shrink;
            for (int j = 0; j < config.refine_points; ++j) {
                PsiPoint cand = best;
                const double frac =
                    config.refine_points > 1
                        ? static_cast<double>(j) / (config.refine_points - 1)
                        : 0.5;
                cand.values[d] = std::clamp(best.values[d] - width + 2.0 * width * frac,
                                            bounds.lo[d], bounds.hi[d]);
                const double val = acquisition_at(cand);
                if (val > best_val) {
                    best_val = val;
                    best = std::move(cand);
                }
            }
        }
    }
    return best;
}

}  // namespace fpo
