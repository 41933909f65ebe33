#include "sbm/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "sbm/error.hpp"
#include "sbm/rng.hpp"

namespace sbm {
namespace {

void check_pair(const LabelAssignment& estimate, const LabelAssignment& truth) {
  if (estimate.size() != truth.size()) {
    throw InvalidArgument("overlap: estimate has " + std::to_string(estimate.size()) +
                          " labels, truth has " + std::to_string(truth.size()));
  }
  if (estimate.q != truth.q) {
    throw InvalidArgument("overlap: estimate and truth disagree on q");
  }
  if (truth.size() == 0) throw InvalidArgument("overlap: empty assignment");
  estimate.validate();
  truth.validate();
}

}  // namespace

LabelAssignment marginalize(const MarginalSet& marginals, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t q = marginals.cols();
  LabelAssignment out{std::vector<std::uint32_t>(marginals.rows()), q};
  std::vector<std::uint32_t> ties;
  ties.reserve(q);
  for (std::size_t i = 0; i < marginals.rows(); ++i) {
    const auto row = marginals.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    ties.clear();
    for (std::size_t r = 0; r < q; ++r) {
      if (row[r] == top) ties.push_back(static_cast<std::uint32_t>(r));
    }
    out.labels[i] = ties.size() == 1 ? ties[0] : ties[rng.below(ties.size())];
  }
  return out;
}

std::vector<std::vector<std::size_t>> confusion_matrix(const LabelAssignment& estimate,
                                                       const LabelAssignment& truth) {
  check_pair(estimate, truth);
  std::vector<std::vector<std::size_t>> counts(estimate.q, std::vector<std::size_t>(truth.q, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++counts[estimate.labels[i]][truth.labels[i]];
  return counts;
}

OverlapResult overlap_exhaustive(const LabelAssignment& estimate, const LabelAssignment& truth) {
  const auto counts = confusion_matrix(estimate, truth);
  const std::size_t q = truth.q;
  std::vector<std::uint32_t> perm(q);
  std::iota(perm.begin(), perm.end(), std::uint32_t{0});
  std::size_t best = 0;
  std::vector<std::uint32_t> best_perm = perm;
  bool first = true;
  do {
    std::size_t hits = 0;
    for (std::size_t b = 0; b < q; ++b) hits += counts[perm[b]][b];
    if (first || hits > best) {
      best = hits;
      best_perm = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {static_cast<double>(best) / static_cast<double>(truth.size()), best_perm};
}

OverlapResult overlap_hungarian(const LabelAssignment& estimate, const LabelAssignment& truth) {
  const auto counts = confusion_matrix(estimate, truth);
  const std::size_t q = truth.q;
  // Minimize cost = -count with the O(q^3) shortest augmenting path method;
  // rows are true labels, columns estimated labels, 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(q + 1, 0.0), v(q + 1, 0.0), way_cost(q + 1);
  std::vector<std::size_t> match(q + 1, 0), way(q + 1, 0);
  auto cost = [&](std::size_t row, std::size_t col) {
    return -static_cast<double>(counts[col - 1][row - 1]);
  };
  for (std::size_t row = 1; row <= q; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(way_cost.begin(), way_cost.end(), inf);
    std::vector<bool> used(q + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= q; ++col) {
        if (used[col]) continue;
        const double cur = cost(r0, col) - u[r0] - v[col];
        if (cur < way_cost[col]) {
          way_cost[col] = cur;
          way[col] = col0;
        }
        if (way_cost[col] < delta) {
          delta = way_cost[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= q; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          way_cost[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::uint32_t> perm(q);
  std::size_t hits = 0;
  for (std::size_t col = 1; col <= q; ++col) {
    perm[match[col] - 1] = static_cast<std::uint32_t>(col - 1);
    hits += counts[col - 1][match[col] - 1];
  }
  return {static_cast<double>(hits) / static_cast<double>(truth.size()), perm};
}

OverlapResult overlap(const LabelAssignment& estimate, const LabelAssignment& truth) {
  return truth.q <= kExhaustiveOverlapMaxQ ? overlap_exhaustive(estimate, truth)
                                           : overlap_hungarian(estimate, truth);
}

double confidence(const MarginalSet& marginals, const LabelAssignment& estimate) {
  if (marginals.rows() != estimate.size() || marginals.rows() == 0) {
    throw InvalidArgument("confidence: marginals and estimate differ in size");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) acc += marginals(i, estimate.labels[i]);
  return acc / static_cast<double>(estimate.size());
}

double chance_level(const LabelAssignment& truth) {
  if (truth.size() == 0) throw InvalidArgument("chance_level: empty assignment");
  const auto sizes = truth.class_sizes();
  return static_cast<double>(*std::max_element(sizes.begin(), sizes.end())) /
         static_cast<double>(truth.size());
}

ScoreReport score(const MarginalSet& marginals, const LabelAssignment& truth, std::uint64_t seed) {
  if (marginals.cols() != truth.q) throw InvalidArgument("score: marginals and truth disagree on q");
  const auto estimate = marginalize(marginals, seed);
  auto result = overlap(estimate, truth);
  return {result.overlap, confidence(marginals, estimate), chance_level(truth),
          std::move(result.permutation)};
}

ScoreReport score(const LabelAssignment& estimate, const LabelAssignment& truth) {
  auto result = overlap(estimate, truth);
  return {result.overlap, 1.0, chance_level(truth), std::move(result.permutation)};
}

}  // namespace sbm
