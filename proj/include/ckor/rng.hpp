#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ckor {

/// Seedable generator with a fixed algorithm (64-bit Mersenne Twister) and
/// hand-written variate transforms, so sequences are identical on every
/// platform and standard library. std::*_distribution is deliberately not
/// used: its output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream) pairs, e.g. one per trajectory.
    static Rng derive(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound);

    /// m distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ckor
