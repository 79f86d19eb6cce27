#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gbl {

// Counter-based Gaussian/uniform stream. Draw k of stream (seed, stream_id)
// is a pure function of (seed, stream_id, k): Philox4x32-10 keyed by the seed,
// with the stream id and block index in the counter words.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform() noexcept;
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  // Fair +1 / -1.
  double rademacher() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }
  // Uniform integer in [0, bound), bound >= 1 (Lemire rejection).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// One raw Philox4x32-10 block; exposed for the known-answer test.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// Stable 64-bit stream ids derived from names (FNV-1a), optionally indexed.
std::uint64_t stream_id(std::string_view name) noexcept;
std::uint64_t stream_id(std::string_view name, std::uint64_t index) noexcept;

}  // namespace gbl
