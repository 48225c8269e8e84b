#pragma once

#include <cstdint>

#include "sdstab/linalg.hpp"

namespace sdstab {

/// splitmix64: tiny seedable generator with platform-independent output,
/// used wherever reproducible random draws feed a ledger or a report.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
};

/// Deterministic seed derivation for independent sub-streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    SplitMix64 g(a * 0x9e3779b97f4a7c15ULL + b * 0xd1b54a32d192ed03ULL + c + 1ULL);
    g.next();
    return g.next();
}

/// Uniform draw from the ball of given radius, bounded away from zero.
inline Vec random_in_ball(std::size_t dim, double radius, SplitMix64& rng) {
    for (;;) {
        Vec v(dim);
        double n2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = rng.uniform(-1.0, 1.0);
            n2 += v[i] * v[i];
        }
        if (n2 <= 1.0 && n2 > 1e-12) {
            for (double& x : v) x *= radius;
            return v;
        }
    }
}

/// Uniform draw from the annulus rmin <= |x| <= rmax.
inline Vec random_in_annulus(std::size_t dim, double rmin, double rmax, SplitMix64& rng) {
    for (;;) {
        Vec v(dim);
        double n2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = rng.uniform(-1.0, 1.0);
            n2 += v[i] * v[i];
        }
        const double n = std::sqrt(n2);
        if (n <= 1.0 && n >= rmin / rmax) {
            for (double& x : v) x *= rmax;
            return v;
        }
    }
}

}  // namespace sdstab
