#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <span>
#include <vector>

namespace gzsl {

/// Seeded generator whose draw sequence is fixed across platforms. Only the raw 64-bit engine
/// output (mt19937_64, fully specified by the standard) is used; all distributions are
/// implemented here rather than through <random>'s implementation-defined ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). Unbiased (rejection sampling).
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

  /// Independent child stream; same (seed, stream) always yields the same child.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gzsl
