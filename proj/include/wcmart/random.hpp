#pragma once

#include <cstdint>
#include <random>

#include "rational.hpp"

namespace wcmart {

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so integers are drawn by hand to keep seeded outputs identical across
// standard libraries.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Sub-seed k of a run with seed s is split_seed(s, k).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform on [lo, hi]; modulo bias is below 2^-50 for the ranges used here.
inline long uniform_int(Rng& rng, long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(rng() % span);
}

inline bool coin(Rng& rng, double p_true = 0.5) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p_true;
}

/// p / q with |p| <= bound and q in [1, max_den].
inline Rational random_rational(Rng& rng, long bound, long max_den = 1) {
    const long num = uniform_int(rng, -bound, bound);
    const long den = uniform_int(rng, 1, max_den);
    Rational r{mpz_class(num), mpz_class(den)};
    r.canonicalize();
    return r;
}

inline RatVector random_vector(Rng& rng, std::size_t n, long bound, long max_den = 1) {
    RatVector v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(random_rational(rng, bound, max_den));
    return v;
}

}  // namespace wcmart
