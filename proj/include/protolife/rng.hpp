#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace protolife {

// Counter-based PRNG: output i of a stream with key K is mix64(K + i * GOLDEN),
// where mix64 is the SplitMix64 finalizer. Streams are forked by hashing the
// parent state together with a label, so draw order in one subsystem never
// depends on another subsystem's draw count. The algorithm id below is pinned
// in snapshot headers; changing the mixing constants is a format break.
inline constexpr const char* kRngAlgorithmId = "splitmix64-ctr/v1";

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27; z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace detail

struct RngStream {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;

    static RngStream root(std::uint64_t master_seed) {
        return {detail::mix64(master_seed + detail::kGolden), 0};
    }

    // Pure function of (parent state, label); does not advance the parent.
    [[nodiscard]] RngStream fork(std::string_view label) const {
        std::uint64_t h = detail::fnv1a64(label);
        std::uint64_t child = detail::mix64(key ^ (h * detail::kGolden) ^ detail::mix64(counter + h));
        return {child, 0};
    }

    std::uint64_t next_u64() {
        return detail::mix64(key + (++counter) * detail::kGolden);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform integer in [0, n). n == 0 returns 0.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool chance(double p) { return uniform01() < p; }

    // Box-Muller; always consumes exactly two draws so stream positions stay
    // predictable regardless of call sites.
    double normal(double mean, double sigma) {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1));
        return mean + sigma * r * std::cos(kTwoPi_ * u2);
    }

    bool operator==(const RngStream&) const = default;

private:
    static constexpr double kTwoPi_ = 6.283185307179586476925286766559;
};

} // namespace protolife
