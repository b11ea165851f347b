#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace fpo {

/// splitmix64 finalizer; used to derive well-separated stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seeded random stream with cheap, consumption-independent substream
/// derivation. Substreams are keyed off the seed identity, not the current
/// generator state, so `substream(k)` yields the same stream no matter how
/// many draws the parent has made. All samplers are implemented locally so
/// that draws are bit-reproducible for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    Rng substream(std::uint64_t key) const {
        return Rng(mix64(seed_ ^ mix64(key + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method (second value of each
    /// accepted pair is discarded so draws carry no hidden state).
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform() - 1.0;
            const double v = 2.0 * uniform() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang squeeze.
    double gamma(double shape) {
        if (!(shape > 0.0)) {
            throw std::invalid_argument("Rng::gamma: shape must be positive");
        }
        if (shape < 1.0) {
            const double u = 1.0 - uniform();  // (0, 1]
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = 1.0 - uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

    /// Index draw from a finite distribution; consumes exactly one uniform.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double c = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            c += probs[i];
            if (u < c) {
                return static_cast<int>(i);
            }
        }
        return static_cast<int>(probs.size()) - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace fpo
