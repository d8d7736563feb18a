#pragma once

#include <cmath>
#include <cstdint>

namespace cascade {

// splitmix64, used for seeding and for deriving child streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b));
}

/// xoshiro256** generator with explicit seeding. The standard library
/// distributions are deliberately avoided: all sampling goes through the
/// helpers below so that byte-identical replay does not depend on the
/// standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& w : state_) {
            x = mix64(x);
            w = x;
        }
    }

    /// Child stream keyed by (tag, index); a function of the construction
    /// seed only, independent of draws made so far.
    Rng derive(std::uint64_t tag, std::uint64_t index = 0) const {
        return Rng(mix64(mix64(seed_, tag), index));
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in (0,1]; safe as a log() argument.
    double uniform01_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Unbiased integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box-Muller.
    double normal() {
        const double u1 = uniform01_pos();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Log-normal parameterized by its median: median * exp(sigma * Z).
    /// sigma == 0 yields exactly the median.
    double lognormal_median(double median, double sigma) {
        const double z = normal();
        return median * std::exp(sigma * z);
    }

    double exponential(double rate) { return -std::log(uniform01_pos()) / rate; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t seed_;
    std::uint64_t state_[4];
};

} // namespace cascade
