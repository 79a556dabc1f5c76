#pragma once

#include <cstdint>

namespace acdlab {

/// 64-bit seed wrapper. Master seeds are always user supplied; per-path seeds
/// come from derive_path_seed so any path can be regenerated in isolation.
struct Seed {
    std::uint64_t value = 0;

    friend bool operator==(const Seed&, const Seed&) = default;
};

/// SplitMix64 finalizer (Steele/Lea/Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-path seed derivation, fixed for all time:
///
///   derived = mix64(master ^ (0x9e3779b97f4a7c15 * (index + 1)))
///
/// The multiplier is odd and mix64 is a bijection, so for a fixed master the
/// map index -> seed is injective: derived seeds never collide, on any
/// platform, regardless of how path generation is scheduled across threads.
constexpr Seed derive_path_seed(Seed master, std::uint64_t index) noexcept {
    constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
    return Seed{mix64(master.value ^ (golden * (index + 1)))};
}

} // namespace acdlab
