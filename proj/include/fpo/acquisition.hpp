#pragma once

#include "fpo/gpmodel.hpp"
#include "fpo/psi.hpp"
#include "fpo/rng.hpp"

namespace fpo {

/// Upper confidence bound.
inline double ucb(double mu, double sigma, double kappa) { return mu + kappa * sigma; }

struct AcquisitionConfig {
    double kappa = 2.0;
    int n_candidates = 500;
    int n_refine = 3;
    double refine_shrink = 0.3;
    int refine_points = 10;  // per coordinate and round
};

/// Picks the psi for the next iteration by maximising UCB of the predicted
/// next-policy return, with the query fingerprint and iteration held at
/// their current values. Random search over the box followed by shrinking
/// coordinate refinement; the returned point is the argmax over everything
/// evaluated. Falls back to a uniform draw while fewer than 3 observations
/// are available.
PsiPoint select_psi(const GPDataset& data, const GPHypers& hypers,
                    const Fingerprint& current_fingerprint, int iteration,
                    const PsiBounds& bounds, const AcquisitionConfig& config, Rng& rng);

}  // namespace fpo
