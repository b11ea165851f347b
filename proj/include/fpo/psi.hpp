#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "fpo/rng.hpp"

namespace fpo {

/// Parameters of the sampling distribution over theta; a bounded vector of
/// dimension 1 or 2 in this codebase.
struct PsiPoint {
    Eigen::VectorXd values;
};

/// Per-dimension box the acquisition searches over.
struct PsiBounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const PsiPoint& p) const {
        for (int d = 0; d < dim(); ++d) {
            if (p.values[d] < lo[d] || p.values[d] > hi[d]) return false;
        }
        return true;
    }

    PsiPoint clamp(PsiPoint p) const {
        p.values = p.values.cwiseMax(lo).cwiseMin(hi);
        return p;
    }

    PsiPoint sample(Rng& rng) const {
        PsiPoint p;
        p.values.resize(dim());
        for (int d = 0; d < dim(); ++d) {
            p.values[d] = rng.uniform(lo[d], hi[d]);
        }
        return p;
    }

    static PsiBounds box(std::initializer_list<double> los, std::initializer_list<double> his) {
        PsiBounds b;
        b.lo = Eigen::Map<const Eigen::VectorXd>(los.begin(), los.size());
        b.hi = Eigen::Map<const Eigen::VectorXd>(his.begin(), his.size());
        if (b.lo.size() != b.hi.size() || (b.hi - b.lo).minCoeff() <= 0.0) {
            throw std::invalid_argument("PsiBounds: degenerate box");
        }
        return b;
    }
};

}  // namespace fpo
