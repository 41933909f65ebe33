#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/estep.hpp"
#include "sbm/graph.hpp"
#include "sbm/matrix.hpp"
#include "sbm/netcore.hpp"
#include "sbm/rng.hpp"

namespace sbm {

/// One length-q message per directed edge. Row e is the message sent along
/// slot e of the graph, i.e. psi^{i->j} with j = graph.target(e) and i the
/// owner of the slot; the reverse message is row graph.reverse(e).
struct MessageSet {
  Matrix values;

  std::size_t q() const noexcept { return values.cols(); }
};

/// theta_r = (1/N) sum_k sum_s c_rs psi^k_s, kept current under single-node
/// belief changes.
class ExternalField {
 public:
  ExternalField() = default;
  ExternalField(const MarginalSet& marginals, const BlockModel& model);

  void recompute(const MarginalSet& marginals, const BlockModel& model);
  /// Replaces the contribution of one node's old belief by its new one.
  void update(std::span<const double> old_belief, std::span<const double> new_belief,
              const BlockModel& model) noexcept;

  std::span<const double> values() const noexcept { return theta_; }
  double operator[](std::size_t r) const noexcept { return theta_[r]; }

 private:
  void refresh_theta(const BlockModel& model) noexcept;

  // class mass sum_k psi^k_s with a Neumaier compensation term
  std::vector<double> mass_;
  std::vector<double> carry_;
  std::vector<double> theta_;
};

struct BpState {
  MessageSet messages;
  MarginalSet marginals;
  ExternalField field;
};

MessageSet init_messages(const Graph& graph, const BlockModel& model, InitMode mode,
                         std::uint64_t seed, const LabelAssignment* labels = nullptr);

/// Builds the full engine state from a message set: marginals follow from
/// the incoming messages through the full-neighborhood field.
BpState make_bp_state(const Graph& graph, const BlockModel& model, MessageSet messages);

/// Recomputes every marginal from the current messages, then the field.
void refresh_marginals(BpState& state, const Graph& graph, const BlockModel& model);

/// One pass over all nodes in a freshly shuffled order. For each node the
/// messages to all its neighbors are recomputed from its incoming messages,
/// damped as (1-d) new + d old, and its marginal and the external field are
/// updated in place. Returns the largest change of any message entry.
/// Throws NumericalFailure naming the edge on a non-finite field.
double bp_sweep(BpState& state, const Graph& graph, const BlockModel& model, double damping,
                Rng& rng);

/// Sweeps refreshing the field from scratch every this many sweeps.
inline constexpr std::size_t kFieldRefreshPeriod = 100;

struct BpResult {
  MarginalSet marginals;
  MessageSet messages;
  EngineReport report;
};

/// Iterates bp_sweep until the largest change is at most tol or max_iters
/// sweeps were made. Non-convergence is reported, not thrown.
BpResult run_bp(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                const LabelAssignment* init_labels = nullptr);

/// Same, starting from a given state (warm start).
BpResult run_bp(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                BpState state);

/// Bethe free energy
///   F = (1/N) sum_{(ij) in E} log Z^ij - (1/N) sum_i log sum_s p_s e^{h^i_s} - <k>/2
/// with Z^ij = sum_rs c_rs psi^{i->j}_r psi^{j->i}_s and <k> = sum_rs c_rs m_r m_s
/// evaluated at the belief fractions m. This is minus the log-likelihood per
/// node up to a graph-only constant, so lower values mean better fits.
double bethe_free_energy(const MessageSet& messages, const MarginalSet& marginals,
                         const Graph& graph, const BlockModel& model);

/// Marginals of the full (non-sparse) BP on all N(N-1) directed pairs,
/// including the non-edge interactions (1 - p_rs). Reference path for small
/// graphs only; throws InvalidArgument above kMaxDenseBpNodes.
inline constexpr std::size_t kMaxDenseBpNodes = 1000;
MarginalSet dense_bp_marginals(const Graph& graph, const BlockModel& model, double tol,
                               std::size_t max_iters, std::uint64_t seed);

}  // namespace sbm
