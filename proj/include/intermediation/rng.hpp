#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace intermed {

/// SplitMix64 (Steele, Lea, Flood). Small state, so one fresh generator per
/// trial is cheap. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        std::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
        return dist(*this);
    }

private:
    std::uint64_t state_;
};

/// Seed of the independent substream for (seed, trial). Two rounds of the
/// SplitMix64 finalizer over seed and trial index.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
    SplitMix64 a(seed);
    const std::uint64_t base = a();
    SplitMix64 b(base ^ (trial * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
    return b();
}

/// In-place Fisher-Yates shuffle, i = size-1 down to 1 swaps with j in [0, i].
template <class T>
void fisher_yates(std::span<T> items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace intermed
