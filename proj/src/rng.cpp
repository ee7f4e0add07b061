#include "qbsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace qbsde {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
constexpr int kRounds = 10;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    __extension__ using u128 = unsigned __int128;
    const u128 p = static_cast<u128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

Philox4x64::Counter Philox4x64::operator()(Counter ctr) const noexcept {
    Key k = key_;
    for (int round = 0; round < kRounds; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
    }
    return ctr;
}

double to_unit_open(std::uint64_t bits) noexcept {
    // 52 high bits, offset by half a step so 0 and 1 are unreachable; with 53
    // bits the largest value would round up to exactly 1.
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

double counter_uniform(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) noexcept {
    const Philox4x64 gen({seed, static_cast<std::uint64_t>(stream)});
    return to_unit_open(gen({a, b, c, 0})[0]);
}

double counter_normal(std::uint64_t seed, Stream stream, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c) noexcept {
    const Philox4x64 gen({seed, static_cast<std::uint64_t>(stream)});
    const auto block = gen({a, b, c, 0});
    const double u1 = to_unit_open(block[0]);
    const double u2 = to_unit_open(block[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace qbsde
