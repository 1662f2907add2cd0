#pragma once

#include <cstdint>
#include <limits>

namespace stsc {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for a named component or an (a, b) coordinate.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix64(mix64(mix64(seed) ^ (a + 0x9e3779b97f4a7c15ULL)) ^
               (b + 0x632be59bd9b4e019ULL));
}

/// Counter-based stream: the j-th output depends only on (key, j), so
/// streams keyed by (seed, start, sample) can be drawn in any order and on
/// any thread with identical results.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr StreamRng(std::uint64_t key) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace stsc
