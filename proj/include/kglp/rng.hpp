#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace kglp {

/// SplitMix64 finalizer. Used for seeding and for deriving child seeds.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// 64-bit FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Child seed for a named sub-stream: splitmix64 applied once to
/// `parent ^ fnv1a64(key)`. Every stage seed in a run is obtained this way
/// from the master seed (see docs/formats.md).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view key) noexcept;

/// xoshiro256** seeded through SplitMix64.
///
/// All draws are defined bit-exactly so that folds and negatives can be
/// reproduced by other implementations:
///   - uniform(n): rejection sampling on the full 64-bit output; values below
///     `(2^64 - n) mod n` are redrawn, then the result is `x mod n`.
///   - uniform01(): `(x >> 11) * 2^-53`.
///   - shuffle(): Fisher-Yates from the last index down, swapping i with
///     uniform(i + 1).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform(std::uint64_t n) noexcept;
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }
  /// Standard normal via Box-Muller (one value per call, second discarded).
  double normal() noexcept;

  /// Independent generator for a named sub-stream.
  Rng fork(std::string_view key) const noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace kglp
