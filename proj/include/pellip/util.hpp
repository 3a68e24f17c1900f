#pragma once

#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "core_linalg.hpp"

namespace pellip {

inline constexpr double pi = std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Worker count from VERIFY_THREADS (default 1).
inline unsigned thread_count() {
    if (const char* s = std::getenv("VERIFY_THREADS")) {
        const long v = std::strtol(s, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
    }
    return 1;
}

/// Runs fn(i) for i in [0, n). Results must be written per index; callers
/// reduce in index order so the output does not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
    const unsigned nt = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n, 1));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (unsigned t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nt) fn(i);
        });
    for (auto& th : pool) th.join();
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

inline double uniform(Rng& g, double a = 0.0, double b = 1.0) {
    return std::uniform_real_distribution<double>(a, b)(g);
}

inline double normal(Rng& g) { return std::normal_distribution<double>(0.0, 1.0)(g); }

inline double log_uniform(Rng& g, double lo, double hi) {
    return std::exp(uniform(g, std::log(lo), std::log(hi)));
}

inline cplx random_phase(Rng& g) { return std::polar(1.0, uniform(g, -pi, pi)); }

inline CVec random_cvec(Rng& g, Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(normal(g), normal(g));
    return v;
}

inline CVec random_unit_cvec(Rng& g, Eigen::Index n) {
    CVec v = random_cvec(g, n);
    return v / v.norm();
}

inline CMat random_cmat(Rng& g, Eigen::Index n) {
    CMat A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = cplx(normal(g), normal(g));
    return A;
}

/// First n points of the dim-dimensional Sobol sequence in [0,1)^dim.
inline std::vector<std::vector<double>> sobol_points(unsigned dim, std::size_t n, std::size_t skip = 0) {
    boost::random::sobol eng(dim);
    eng.discard(skip * dim);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    const double scale = std::ldexp(1.0, -static_cast<int>(std::numeric_limits<boost::random::sobol::result_type>::digits));
    for (auto& p : pts)
        for (auto& x : p) x = (static_cast<double>(eng()) + 0.5) * scale;
    return pts;
}

}  // namespace pellip
