#pragma once

#include <cstdint>
#include <random>

namespace dnpr {

// splitmix64 mixer; used to derive independent per-realization streams from
// (master seed, index) without correlations between adjacent indices.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

// Uniform double in [0, 1) from the top 53 bits; avoids the
// implementation-defined behaviour of std::uniform_real_distribution.
inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * u01(rng);
}

// Exact Poisson sample via Knuth's product method, chunked so exp(-mean)
// never underflows.  O(mean) draws; fine for the means used here (<= 1e6).
inline long poisson(std::mt19937_64& rng, double mean) {
    long total = 0;
    while (mean > 0.0) {
        const double chunk = mean > 500.0 ? 500.0 : mean;
        mean -= chunk;
        const double l = std::exp(-chunk);
        long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= u01(rng);
        } while (p > l);
        total += k - 1;
    }
    return total;
}

} // namespace dnpr
