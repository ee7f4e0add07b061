#pragma once

#include <array>
#include <cstdint>

namespace qbsde {

/// Philox4x64-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3"). Every output block is a pure function of
/// (key, counter), so any draw can be recomputed without replaying a stream.
class Philox4x64 {
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    explicit constexpr Philox4x64(Key key) noexcept : key_(key) {}

    [[nodiscard]] Counter operator()(Counter ctr) const noexcept;

    [[nodiscard]] const Key& key() const noexcept { return key_; }

private:
    Key key_;
};

/// Named random streams so that independent consumers sharing one seed never
/// address the same counters.
enum class Stream : std::uint64_t {
    brownian = 1,
    oracle = 2,
    mlp_init = 3,
    vqc_init = 4,
    adapter_init = 5,
    head_init = 6,
    shuffle = 7,
    test = 99,
};

/// Maps 64 random bits to a double in the open interval (0, 1).
[[nodiscard]] double to_unit_open(std::uint64_t bits) noexcept;

/// Standard-normal variate addressed by (seed, stream, a, b, c).
///
/// Transform: one Philox block is drawn at counter (a, b, c, 0) with key
/// (seed, stream); its first two words become u1, u2 in (0, 1) and the
/// Box-Muller cosine branch gives sqrt(-2 ln u1) * cos(2 pi u2).
[[nodiscard]] double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t a,
                                    std::uint64_t b, std::uint64_t c) noexcept;

/// Uniform (0, 1) variate addressed like counter_normal.
[[nodiscard]] double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t a,
                                     std::uint64_t b, std::uint64_t c) noexcept;

/// SplitMix64 finalizer; used to derive child seeds.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combination of seed material.
[[nodiscard]] constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h ^ (mix64(v) + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2)));
}

}  // namespace qbsde
