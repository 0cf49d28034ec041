#pragma once

#include <cstdint>

namespace koos {

// splitmix64 finalizer. Used everywhere a child seed is derived from a parent
// seed and an index, so parallel work units get independent, reproducible
// streams regardless of scheduling.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Minimal deterministic generator (splitmix64 stream). Not std::mt19937 on
// purpose: the standard distributions are not portable across library
// implementations, and model reproducibility depends on the exact draws.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound). Modulo bias is ~bound/2^64, irrelevant at the
    // bounds used here (dataset sizes, feature counts).
    std::uint64_t bounded(std::uint64_t bound) { return next() % bound; }

    // Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::uint64_t state_;
};

} // namespace koos
