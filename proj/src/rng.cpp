#include "ckor/rng.hpp"

#include <numeric>

#include "ckor/error.hpp"

namespace ckor {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream)
{
    return Rng(splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1)));
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound == 0) throw InputError("Rng::below: bound must be positive");
    // Largest multiple of bound representable; values above it are rejected.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t m)
{
    if (m > n) throw InputError("cannot draw " + std::to_string(m) + " distinct items from " + std::to_string(n));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
}

}  // namespace ckor
