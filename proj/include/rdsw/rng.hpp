// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

namespace rdsw {

/// Philox4x32-10 counter-based block function (Salmon et al., Random123).
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Stream of uniform variates addressed by (seed, stream_id).
///
/// The seed is the Philox key and the stream id occupies the upper half of
/// the counter, so distinct stream ids never share a counter block and each
/// stream has 2^64 blocks of its own. Copying a StreamRng copies its
/// position; there is no hidden global state.
class StreamRng {
 public:
  StreamRng() = default;
  StreamRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept {
    if (cursor_ == 2) refill();
    return buffer_[cursor_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one variate per call, pair cached).
  double normal() noexcept;

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cursor_ = 2;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Stream-id namespaces so the different consumers inside one experiment
/// never draw from the same stream.
namespace streams {
inline constexpr std::uint64_t kStationary = 1ULL << 56;
inline constexpr std::uint64_t kReplica = 2ULL << 56;
inline constexpr std::uint64_t kPairs = 3ULL << 56;
inline constexpr std::uint64_t kInitial = 4ULL << 56;
inline constexpr std::uint64_t kAux = 5ULL << 56;
inline constexpr std::uint64_t kResample = 6ULL << 56;
}  // namespace streams

}  // namespace rdsw
