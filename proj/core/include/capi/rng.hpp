#pragma once

#include <cstdint>
#include <limits>

namespace capi {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based pseudorandom stream keyed by (seed, stream, substream).
///
/// The k-th draw is a pure function of the key and k, so any episode can be
/// replayed on any worker without sharing generator state. Satisfies
/// UniformRandomBitGenerator.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  constexpr StreamRng(std::uint64_t seed, std::uint64_t stream,
                      std::uint64_t substream = 0) noexcept
      : key_(mix64(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL)) ^
                   (substream * 0x8CB92BA72F3D8DD7ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace capi
