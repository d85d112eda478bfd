// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace comdml::rng {

using Engine = std::mt19937_64;

// splitmix64 finalizer, used to derive independent stream seeds from one
// master seed so that consuming a variable number of draws in one stream
// never perturbs another.
inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix(mix(a, b), c);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return mix(mix(a, b, c), d);
}

// Distributions are hand-rolled on top of mt19937_64 (whose output sequence
// the standard fully specifies) so results do not depend on the standard
// library's distribution implementations.

inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53; // [0, 1)
}

inline std::size_t uniform_index(Engine& g, std::size_t n) {
    // Lemire multiply-shift; bias is negligible for simulation-sized n.
    return static_cast<std::size_t>((static_cast<unsigned __int128>(g()) * n) >> 64);
}

inline double uniform_range(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

inline double normal(Engine& g) {
    // Box-Muller without caching; stateless per call.
    double u1 = uniform01(g);
    double u2 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 handled with the boost
// Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha).
inline double gamma(Engine& g, double alpha) {
    if (alpha < 1.0) {
        double u = uniform01(g);
        while (u <= 0.0) u = uniform01(g);
        return gamma(g, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal(g);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01(g);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline std::vector<double> dirichlet(Engine& g, double concentration, std::size_t n) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& v : w) {
        v = gamma(g, concentration);
        sum += v;
    }
    if (sum <= 0.0) {
        for (auto& v : w) v = 1.0 / static_cast<double>(n);
        return w;
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Picks k distinct elements of [0, n) by partial Fisher-Yates; result sorted.
inline std::vector<int> sample_indices(Engine& g, int n, int k) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    if (k > n) k = n;
    for (int i = 0; i < k; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        uniform_index(g, static_cast<std::size_t>(n - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(k));
    std::sort(ids.begin(), ids.end());
    return ids;
}

} // namespace comdml::rng
