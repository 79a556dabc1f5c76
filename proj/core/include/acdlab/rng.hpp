#pragma once

#include <cstdint>

#include "acdlab/seed.hpp"

namespace acdlab {

/// xoshiro256++ stream, seeded by splitmix64 expansion of a 64-bit Seed.
/// Plain integer arithmetic only, so sequences are identical on every
/// platform. One instance per path; never shared between threads.
class Rng {
public:
    explicit Rng(Seed seed) noexcept {
        std::uint64_t sm = seed.value;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            word = mix64(sm);
        }
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1): ((u >> 11) + 0.5) * 2^-53.
    /// Never returns 0 or 1, so it can feed the normal quantile directly.
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by inverse-CDF transform (single-stream, no rejection).
    double gaussian() noexcept;

    /// Uniform integer in [0, bound) via the 128-bit multiply-shift reduction.
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    bool coin() noexcept { return (next_u64() >> 63) != 0; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace acdlab
