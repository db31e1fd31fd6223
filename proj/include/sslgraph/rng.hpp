#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sslgraph {

/// Counter-based generator: the n-th draw is a pure function of (key, n).
///
/// Built on the SplitMix64 finalizer, so streams are identical across
/// platforms and compilers. `split` derives an independent child key, which
/// is how parallel runs and sub-stages get non-overlapping streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();
  bool bernoulli(double p);

  Rng split(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace sslgraph
