#include "ml2r/rng.hpp"

#include <cmath>
#include <numbers>

namespace ml2r {

namespace {

// Philox4x32 round constants (Salmon et al., SC 2011).
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> philox_block(std::uint32_t k0, std::uint32_t k1,
                                                 std::array<std::uint32_t, 4> ctr) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kPhiloxM0, ctr[0], hi0, lo0);
        mul_hi_lo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, SeedDomain domain) {
    return splitmix64(master_seed + 0x632BE59BD9B4E019ull * static_cast<std::uint64_t>(domain));
}

RngStream::RngStream(std::uint64_t seed, StreamKey key)
    : key_lo_(static_cast<std::uint32_t>(seed)),
      key_hi_(static_cast<std::uint32_t>(seed >> 32)),
      key_(key),
      cached_block_(~std::uint64_t{0}) {
    // Counter layout: [0] draw block, [1] path low bits,
    // [2] level (8 bits) | path high bits, [3] replication.
    prefix_[1] = static_cast<std::uint32_t>(key.path);
    prefix_[2] = (key.level << 24) | static_cast<std::uint32_t>((key.path >> 32) & 0xFFFFFFull);
    prefix_[3] = key.replication;
}

std::uint64_t RngStream::next_bits() {
    const std::uint64_t lane = lane_++;
    const std::uint64_t block = lane >> 1;
    if (block != cached_block_) {
        auto ctr = prefix_;
        ctr[0] = static_cast<std::uint32_t>(block);
        // Blocks beyond 2^32 spill into unused level bits; a single path
        // never draws that much, but keep the counter well defined.
        ctr[2] ^= static_cast<std::uint32_t>(block >> 32) << 8;
        block_ = philox_block(key_lo_, key_hi_, ctr);
        cached_block_ = block;
    }
    const int half = static_cast<int>(lane & 1u) * 2;
    return (static_cast<std::uint64_t>(block_[half + 1]) << 32) | block_[half];
}

double RngStream::next_uniform() {
    // (bits >> 11) + 1 maps onto {1, ..., 2^53}, so u lies in (0, 1].
    return static_cast<double>((next_bits() >> 11) + 1) * 0x1p-53;
}

double RngStream::next_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

}  // namespace ml2r
