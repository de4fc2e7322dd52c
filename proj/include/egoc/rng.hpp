// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace egoc {

/// Seeded random source with portable output. std::mt19937_64 is fully
/// specified by the standard and the uniform mapping below avoids the
/// implementation-defined std::uniform_real_distribution, so identical
/// seeds reproduce identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased index in [0, n).
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = gen_();
        while (v > bound) v = gen_();
        return static_cast<std::size_t>(v % n);
    }

    /// Standard normal via Box-Muller (no cached spare; one value per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace egoc
