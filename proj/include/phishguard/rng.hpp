#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace phishguard {

/// Seeded random source with platform-independent sampling.
///
/// std::mt19937_64 output is fully specified by the standard, but the
/// distributions and std::shuffle are not, so every draw used by the
/// pipeline goes through the helpers below to keep runs bit-reproducible
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 bits of randomness.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a parent seed and a tag (record id, level, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace phishguard
