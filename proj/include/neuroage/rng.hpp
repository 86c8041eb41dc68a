#pragma once

#include <cstdint>

namespace neuroage {

// Counter-based uniform generator: splitmix64 finalizer over
// (seed, stream, counter). Every draw is a pure function of its coordinates,
// so spike streams are reproducible regardless of generation order and
// across platforms.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
        return mix(mix(seed ^ mix(stream)) ^ counter);
    }

    // Uniform in (0, 1]; never returns 0 so -log(u) is always finite.
    double uniform(std::uint64_t stream, std::uint64_t counter) const {
        const std::uint64_t b = bits(stream, counter) >> 11;  // 53 bits
        return (static_cast<double>(b) + 1.0) * 0x1.0p-53;
    }
};

}  // namespace neuroage
