#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace sbm {

/// Counter-based pseudo random generator (SplitMix64).
///
/// Output k of a stream seeded with s is mix(s + (k+1) * 0x9E3779B97F4A7C15)
/// where mix is the SplitMix64 finalizer (Steele, Lea, Flood 2014). All
/// distributions below are implemented here rather than taken from <random>
/// so that draws are bit-identical across standard library implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1].
  double uniform_open_zero() noexcept { return 1.0 - uniform(); }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer in [0, bound) by Lemire's multiply-shift rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Standard exponential variate.
  double exponential() noexcept;

  /// Standard normal variate (Box-Muller, one value per call).
  double normal() noexcept;

  /// Number of successes in `trials` Bernoulli(p) trials. Exact; cost is
  /// O(min(p, 1-p) * trials) via geometric skipping.
  std::uint64_t binomial(std::uint64_t trials, double p) noexcept;

  /// Fills `out` with a draw from the symmetric Dirichlet(1) distribution.
  void dirichlet_uniform(std::span<double> out) noexcept;

  template <class T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// Derives an independent child seed from this seed and a stream tag.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix(seed ^ mix(tag + kGamma));
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

}  // namespace sbm
