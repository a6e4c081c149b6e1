#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace botdrive {

/// SplitMix64 generator. Satisfies UniformRandomBitGenerator so it plugs into
/// the <random> distributions; construction is free, which makes it suitable
/// for counter-based (seed, tick, agent) draws.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31u);
    }

    /// Uniform double in [0, 1).
    constexpr double uniform() { return static_cast<double>((*this)() >> 11u) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (const std::uint64_t p : parts) {
        SplitMix64 g(h ^ (p + 0x9e3779b97f4a7c15ull + (h << 6u) + (h >> 2u)));
        h = g();
    }
    return h;
}

}  // namespace botdrive
