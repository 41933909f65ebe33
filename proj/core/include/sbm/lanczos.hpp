#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sbm/matrix.hpp"
#include "sbm/operators.hpp"

namespace sbm {

enum class EigenOrder {
  kLargestAlgebraic,
  kLargestMagnitude,
};

struct EigenOptions {
  double tol = 1e-9;
  /// Restart cycles before SolverNotConverged is thrown.
  std::size_t max_restarts = 500;
  /// Krylov basis size; 0 picks max(2 count + 20, 40), capped at dim.
  std::size_t basis_size = 0;
  std::uint64_t seed = 0;
};

struct EigenResult {
  std::vector<double> values;
  /// dim x count, column r is the unit eigenvector for values[r].
  Matrix vectors;
  /// ||Op x - lambda x|| per pair.
  std::vector<double> residuals;
  std::size_t matvecs = 0;
  std::size_t restarts = 0;
};

/// Thick-restart Lanczos with full reorthogonalization. Eigenvectors are
/// sign-fixed so that their largest-magnitude entry is positive.
/// Throws InvalidArgument if count exceeds dim and SolverNotConverged when
/// the residual tolerance (relative to the largest Ritz magnitude) is not met.
EigenResult top_eigenpairs(const SymmetricOperator& op, std::size_t count, EigenOrder order,
                           const EigenOptions& options = {});

}  // namespace sbm
