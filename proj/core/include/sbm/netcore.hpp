#pragma once

#include <cstddef>
#include <cstdint>

#include "sbm/block_model.hpp"
#include "sbm/graph.hpp"
#include "sbm/matrix.hpp"

namespace sbm {

/// N x q node beliefs psi^i_r; each row is a probability vector.
using MarginalSet = Matrix;

struct Instance {
  Graph graph;
  LabelAssignment labels;
};

/// Draws labels from the multinomial with parameters p_r, then links each
/// unordered pair independently with probability c_{t_i t_j} / n.
///
/// Per class pair the number of edges is drawn from the exact binomial and
/// that many distinct pairs are placed uniformly, so the cost is O(N + M).
/// Throws InvalidArgument if some c_rs exceeds n.
Instance generate(const BlockModel& model, std::size_t n, std::uint64_t seed);

/// Complete-data maximum likelihood estimate of the parameters.
///
/// p_r = n_r / N; p_rr = 2 e_rr / (n_r (n_r - 1)); p_rs = e_rs / (n_r n_s)
/// with e_rs the number of edges joining classes r and s. A class with a
/// single node has no internal pairs and gets p_rr = 0. The result is in
/// scaled form with n_scale = N. Throws EstimationError for an empty class.
BlockModel estimate_complete(const Graph& graph, const LabelAssignment& labels);

/// log P(A, t | theta) of the generative model, with p_rs = c_rs / n_scale.
double complete_log_likelihood(const Graph& graph, const LabelAssignment& labels,
                               const BlockModel& model);

struct ExactPosterior {
  MarginalSet marginals;
  /// log sum_t P(A, t | theta).
  double log_likelihood = 0.0;
};

/// Largest q^N accepted by exact_posterior.
inline constexpr double kMaxExactAssignments = 1e7;

/// Exhaustive summation over all q^N assignments. Throws InstanceTooLarge
/// when q^N exceeds kMaxExactAssignments.
ExactPosterior exact_posterior(const Graph& graph, const BlockModel& model);

inline MarginalSet exact_marginals(const Graph& graph, const BlockModel& model) {
  return exact_posterior(graph, model).marginals;
}

}  // namespace sbm
