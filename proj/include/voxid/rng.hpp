#pragma once

#include <cmath>
#include <cstdint>

namespace voxid {

// Deterministic PRNG behind every stochastic step (k-means++ seeding, corpus
// synthesis). The exact algorithm is pinned here so any reimplementation can
// reproduce each stream bit for bit.
//
// State transition, xorshift64* with 64-bit state s (s != 0):
//     s ^= s >> 12;  s ^= s << 25;  s ^= s >> 27;
//     out = s * 0x2545F4914F6CDD1D
//
// Seeding and stream derivation use the splitmix64 finalizer:
//     z = v + 0x9E3779B97F4A7C15
//     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//     mix(v) = z ^ (z >> 31)
// The stream for labels (a, b, c) starts at
//     s = mix(mix(mix(mix(seed) ^ a) ^ b) ^ c)
// with s == 0 replaced by 0x9E3779B97F4A7C15. Independent labels give
// independent streams, so work split across threads stays reproducible.
//
// uniform():  top 53 bits of out, (out >> 11) * 2^-53, in [0, 1)
// index(n):   floor(uniform() * n), in [0, n)
// gaussian(): Box-Muller, sqrt(-2 ln u1) * cos(2 pi u2), u1 forced into (0, 1]
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;
    }

    static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
        Rng r(0);
        r.state_ = mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
        if (r.state_ == 0) r.state_ = 0x9E3779B97F4A7C15ull;
        return r;
    }

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1Dull;
    }

    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

    double gaussian() {
        double u1 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t v) {
        std::uint64_t z = v + 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace voxid
