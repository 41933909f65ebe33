#include "sbm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sbm/error.hpp"
#include "sbm/rng.hpp"

namespace sbm {
namespace {

constexpr std::size_t kMaxLloydIters = 300;
constexpr double kRelativeTol = 1e-7;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    acc += d * d;
  }
  return acc;
}

std::size_t distinct_rows(const Matrix& points) {
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a);
    const auto rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t count = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (less(idx[i - 1], idx[i])) ++count;
  }
  return count;
}

std::size_t sample_weighted(Rng& rng, const std::vector<double>& weight, double total) {
  double target = rng.uniform() * total;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    target -= weight[i];
    if (target < 0.0 && weight[i] > 0.0) return i;
  }
  for (std::size_t i = weight.size(); i-- > 0;) {
    if (weight[i] > 0.0) return i;
  }
  return 0;
}

Matrix seed_centers(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  Matrix centers(k, d);
  const auto first = static_cast<std::size_t>(rng.below(n));
  std::copy_n(points.row(first).begin(), d, centers.row(0).begin());

  std::vector<double> closest(n), candidate(n), best(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(points.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const std::size_t pick = sample_weighted(rng, closest, total);
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        candidate[i] = std::min(closest[i], sq_dist(points.row(i), points.row(pick)));
        potential += candidate[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_index = pick;
        best.swap(candidate);
      }
    }
    std::copy_n(points.row(best_index).begin(), d, centers.row(c).begin());
    closest.swap(best);
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, Matrix centers) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const std::size_t k = centers.rows();
  std::vector<std::uint32_t> label(n, 0);
  std::vector<double> dist(n, 0.0);
  std::vector<std::size_t> count(k);
  double previous = std::numeric_limits<double>::infinity();
  double inertia = 0.0;

  for (std::size_t it = 0; it < kMaxLloydIters; ++it) {
    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double v = sq_dist(points.row(i), centers.row(c));
        if (v < best) {
          best = v;
          arg = static_cast<std::uint32_t>(c);
        }
      }
      label[i] = arg;
      dist[i] = best;
      inertia += best;
    }
    const bool done = inertia == 0.0 || (previous - inertia) <= kRelativeTol * previous;
    previous = inertia;
    if (done) break;

    std::fill(centers.data().begin(), centers.data().end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[label[i]];
      auto center = centers.row(label[i]);
      const auto p = points.row(i);
      for (std::size_t c = 0; c < d; ++c) center[c] += p[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto center = centers.row(c);
      if (count[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its center.
        const auto far = static_cast<std::size_t>(
            std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy_n(points.row(far).begin(), d, center.begin());
        dist[far] = 0.0;
        continue;
      }
      for (auto& v : center) v /= static_cast<double>(count[c]);
    }
  }
  return {LabelAssignment{std::move(label), k}, std::move(centers), inertia};
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed) {
  if (k == 0) throw InvalidArgument("kmeans: k must be positive");
  if (points.rows() < k || distinct_rows(points) < k) {
    throw InvalidArgument("kmeans: fewer than " + std::to_string(k) + " distinct points");
  }
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(restarts, 1); ++run) {
    Rng rng(Rng::derive(seed, run));
    auto result = lloyd(points, seed_centers(points, k, rng));
    if (result.inertia < best.inertia) best = std::move(result);
  }
  return best;
}

}  // namespace sbm
