#pragma once
// Counter-keyed random streams.
//
// Every random quantity in the toolkit is drawn from a stream whose key is a
// pure function of (master seed, purpose tag, indices). Two runs that ask for
// the same key see the same numbers no matter which thread asks or in which
// order, which is what makes parallel Monte Carlo bit-reproducible.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace qfusion {

/// Finalizer of SplitMix64 (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Purpose tags keep substreams for different noise sources disjoint.
enum class StreamKind : std::uint64_t {
  scenario_noise_var = 1,
  scenario_gain = 2,
  measurement = 3,
  quantization = 4,
  gaussian_statistic = 5,
  search = 6,
};

/// Derives a 64-bit stream key from the master seed and any number of indices.
inline std::uint64_t stream_key(std::uint64_t seed, StreamKind kind,
                                std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t key = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  key = mix64(key ^ (static_cast<std::uint64_t>(kind) * 0x9e3779b97f4a7c15ULL));
  for (std::uint64_t idx : indices) {
    key = mix64(key + 0x9e3779b97f4a7c15ULL + mix64(idx + 0xbb67ae8584caa73bULL));
  }
  return key;
}

/// SplitMix64 generator started at a derived key; satisfies UniformRandomBitGenerator.
/// Output i of a stream is mix64(key + (i+1)*gamma), so the stream is a pure
/// function of its key and position.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) noexcept : state_(key) {}
  RngStream(std::uint64_t seed, StreamKind kind, std::initializer_list<std::uint64_t> indices) noexcept
      : state_(stream_key(seed, kind, indices)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace qfusion
