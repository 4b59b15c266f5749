#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace oger {

/// Philox4x32-10 counter-based generator.
///
/// A stream is fully described by a 64-bit key and a 64-bit block counter, so
/// independent streams are obtained by deriving new keys rather than by
/// advancing shared state. `derive` mixes labels into the key; the result does
/// not depend on how far the parent stream has been consumed. Output is
/// identical on every platform.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Independent child stream keyed by (this key, label).
  CounterRng derive(std::uint64_t label) const;
  CounterRng derive(std::string_view label) const;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound). Unbiased via rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// 64-bit avalanche mix (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over bytes, finalized with mix64.
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed);

}  // namespace oger
