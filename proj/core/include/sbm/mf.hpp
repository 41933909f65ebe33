#pragma once

#include <cstddef>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/estep.hpp"
#include "sbm/graph.hpp"
#include "sbm/netcore.hpp"
#include "sbm/rng.hpp"

namespace sbm {

/// Which class mass enters the non-edge part of the mean-field field
///   h^i_r = sum_{j in di, s} log(p_rs/(1-p_rs)) psi^j_s + sum_s X_rs log(1-p_rs).
enum class MfNonEdgeMass {
  /// X_rs = (N - delta_rs) m_s / N with m the current belief mass.
  kBeliefMass,
  /// X_rs = (N - delta_rs) p_s with p the model priors.
  kPrior,
  /// X_rs = m_s - psi^i_s, the exact sum over j != i.
  kCavity,
};

/// Node-factorized beliefs with the cached class mass m_r = sum_i psi^i_r.
struct MfState {
  MarginalSet beliefs;
  std::vector<double> mass;

  void recompute_mass();
};

MfState init_mf_state(const Graph& graph, const BlockModel& model, InitMode mode,
                      std::uint64_t seed, const LabelAssignment* labels = nullptr);
MfState make_mf_state(MarginalSet beliefs);

/// One randomized sequential pass over nodes. Each new belief is
/// p_r e^{h^i_r} normalized, damped as (1-d) new + d old and renormalized;
/// the mass cache is updated incrementally. Returns the largest belief
/// change. Throws NumericalFailure on a non-finite field.
double mf_sweep(MfState& state, const Graph& graph, const BlockModel& model, double damping,
                Rng& rng, MfNonEdgeMass mass_mode = MfNonEdgeMass::kBeliefMass);

/// F_MF = sum_{i<j,rs} (A_ij log(p_rs/(1-p_rs)) + log(1-p_rs)) psi^i_r psi^j_s
///        + sum_{i,r} psi^i_r (log p_r - log psi^i_r).
/// Non-edge pairs are aggregated through class masses in O(N q^2).
double mf_free_energy(const MfState& state, const Graph& graph, const BlockModel& model);

struct MfResult {
  MfState state;
  EngineReport report;
};

MfResult run_mf(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                const LabelAssignment* init_labels = nullptr,
                MfNonEdgeMass mass_mode = MfNonEdgeMass::kBeliefMass);
MfResult run_mf(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                MfState state, MfNonEdgeMass mass_mode = MfNonEdgeMass::kBeliefMass);

}  // namespace sbm
