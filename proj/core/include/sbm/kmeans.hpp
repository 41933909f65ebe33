#pragma once

#include <cstddef>
#include <cstdint>

#include "sbm/block_model.hpp"
#include "sbm/matrix.hpp"

namespace sbm {

struct KMeansResult {
  LabelAssignment labels;
  /// k x d cluster centers.
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd's algorithm with greedy k-means++ seeding, best of `restarts` runs
/// by inertia. Iterates until the relative inertia change drops below 1e-7.
/// Throws InvalidArgument when fewer than k distinct points are given.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t restarts,
                    std::uint64_t seed);

}  // namespace sbm
