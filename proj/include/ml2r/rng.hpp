#pragma once

#include <array>
#include <cstdint>

namespace ml2r {

/// Identifies one logical random stream. Streams with distinct keys are
/// statistically independent, and a fixed (master_seed, key) pair yields a
/// bit-reproducible draw sequence regardless of thread count.
struct StreamKey {
    std::uint32_t replication = 0;
    std::uint32_t level = 0;
    std::uint64_t path = 0;
};

/// Seed domains keep pilot runs, the theta pre-optimization and the main
/// estimation from ever sharing a stream, while the per-stream key stays a
/// plain (replication, level, path) triple.
enum class SeedDomain : std::uint64_t {
    estimation = 0,
    v1_pilot = 1,
    var_pilot = 2,
    theta_pilot = 3,
    scratch = 4,
};

std::uint64_t derive_seed(std::uint64_t master_seed, SeedDomain domain);

/// Counter-based stream (Philox4x32-10). The 128-bit counter encodes
/// (replication, level, path, draw-block) so any stream can be recreated
/// from scratch at any point of a parallel run.
class RngStream {
  public:
    RngStream(std::uint64_t seed, StreamKey key);

    /// Standard normal via Box-Muller; consumes uniforms from this stream.
    double next_normal();

    /// Uniform on (0, 1]; never returns 0, so log(u) is always finite.
    double next_uniform();

    const StreamKey& key() const { return key_; }

  private:
    std::uint64_t next_bits();

    std::uint32_t key_lo_;
    std::uint32_t key_hi_;
    std::array<std::uint32_t, 4> prefix_{};  // counter lanes 1..3
    StreamKey key_;
    std::uint64_t lane_ = 0;
    std::array<std::uint32_t, 4> block_{};
    std::uint64_t cached_block_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ml2r
