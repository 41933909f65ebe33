#include "sbm/rng.hpp"

#include <cmath>
#include <numbers>

namespace sbm {

__extension__ using uint128 = unsigned __int128;

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  auto x = (*this)();
  auto m = static_cast<uint128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<uint128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::exponential() noexcept { return -std::log(uniform_open_zero()); }

double Rng::normal() noexcept {
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::binomial(std::uint64_t trials, double p) noexcept {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (p > 0.5) return trials - binomial(trials, 1.0 - p);

  // Successive success positions are separated by Geometric(p) gaps.
  const double log_q = std::log1p(-p);
  std::uint64_t successes = 0;
  double position = -1.0;
  const auto limit = static_cast<double>(trials);
  for (;;) {
    position += 1.0 + std::floor(std::log(uniform_open_zero()) / log_q);
    if (position >= limit) break;
    ++successes;
  }
  return successes;
}

void Rng::dirichlet_uniform(std::span<double> out) noexcept {
  double total = 0.0;
  for (auto& x : out) {
    x = exponential();
    total += x;
  }
  for (auto& x : out) x /= total;
}

}  // namespace sbm
