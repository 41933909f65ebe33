#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/netcore.hpp"

namespace sbm {

/// Per-row argmax; ties are broken uniformly at random among the maxima.
LabelAssignment marginalize(const MarginalSet& marginals, std::uint64_t seed);

/// Counts n_ab of nodes with estimated label a and true label b.
std::vector<std::vector<std::size_t>> confusion_matrix(const LabelAssignment& estimate,
                                                       const LabelAssignment& truth);

struct OverlapResult {
  double overlap = 0.0;
  /// perm[b] is the estimated label matched to true label b.
  std::vector<std::uint32_t> permutation;
};

/// Q = (1/N) max_pi sum_i [est_i == pi(truth_i)]. Exhaustive for q <= 8 with
/// ties going to the lexicographically first permutation; optimal assignment
/// on the confusion matrix above that. Throws InvalidArgument on mismatched
/// sizes or class counts.
OverlapResult overlap(const LabelAssignment& estimate, const LabelAssignment& truth);

/// Exhaustive search over all q! permutations.
OverlapResult overlap_exhaustive(const LabelAssignment& estimate, const LabelAssignment& truth);
/// Hungarian algorithm on the confusion matrix.
OverlapResult overlap_hungarian(const LabelAssignment& estimate, const LabelAssignment& truth);

/// Largest q for which overlap() enumerates permutations.
inline constexpr std::size_t kExhaustiveOverlapMaxQ = 8;

/// C = (1/N) sum_i psi^i at the estimated label.
double confidence(const MarginalSet& marginals, const LabelAssignment& estimate);

/// Largest empirical class frequency of the labels.
double chance_level(const LabelAssignment& truth);

struct ScoreReport {
  double overlap = 0.0;
  double confidence = 0.0;
  double chance = 0.0;
  std::vector<std::uint32_t> best_permutation;
  double illusive_gap() const noexcept { return confidence - overlap; }
};

/// Marginalizes, then scores against the truth.
ScoreReport score(const MarginalSet& marginals, const LabelAssignment& truth, std::uint64_t seed);
/// Scores hard labels; confidence is 1 by construction.
ScoreReport score(const LabelAssignment& estimate, const LabelAssignment& truth);

}  // namespace sbm
