#pragma once

#include <cmath>
#include <cstdint>

#include "spinmem/constants.hpp"

namespace spinmem {

// Deterministic, platform-independent RNG. std::normal_distribution and
// friends are implementation-defined, so everything here is spelled out in
// integer arithmetic plus explicit transforms. Streams are derived from
// (seed, stream index) so Monte Carlo units can be evaluated in any order
// or on any thread count with identical results.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    Rng() : Rng(0, 0) {}
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
        for (auto& word : s_) word = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no state cache; one draw costs two uniforms).
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(two_pi * uniform());
    }

    /// Poisson by Knuth's product method; large means are split to keep
    /// exp(-mean) representable.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        int n = 0;
        while (mean > 400.0) {
            n += poisson_knuth(400.0);
            mean -= 400.0;
        }
        return n + poisson_knuth(mean);
    }

    /// Uniform point in a ball of given radius, centred on the origin.
    void in_ball(double radius, double& x, double& y, double& z) {
        do {
            x = uniform(-1.0, 1.0);
            y = uniform(-1.0, 1.0);
            z = uniform(-1.0, 1.0);
        } while (x * x + y * y + z * z > 1.0);
        x *= radius;
        y *= radius;
        z *= radius;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    int poisson_knuth(double mean) {
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform_pos();
        } while (p > limit);
        return k - 1;
    }

    std::uint64_t s_[4];
};

}  // namespace spinmem
