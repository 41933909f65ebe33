#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/bp.hpp"
#include "sbm/embedding.hpp"
#include "sbm/estep.hpp"
#include "sbm/graph.hpp"
#include "sbm/mf.hpp"
#include "sbm/netcore.hpp"
#include "sbm/rng.hpp"

namespace sbm {

enum class EmEngine { kBp, kMf };
enum class EmInit { kRandomAffinity, kSpectral, kGiven };

struct EmConfig {
  EmEngine engine = EmEngine::kBp;
  EstepOptions estep{};
  std::size_t max_rounds = 50;
  /// Stop once max_rs |c_rs - c'_rs| falls to this value.
  double param_tol = 1e-4;
  std::size_t restarts = 1;
  EmInit init = EmInit::kRandomAffinity;
  /// Starting model for EmInit::kGiven; rescaled to the graph size.
  std::optional<BlockModel> given;
  /// Starting labels when estep.init is InitMode::kFromLabels.
  std::optional<LabelAssignment> init_labels;
  SpectralMethod spectral_method = SpectralMethod::kDiffusion;
  SpectralOptions spectral{};
  /// When false the priors of the starting model are kept fixed.
  bool learn_priors = true;
  /// Start each E-step from the previous round's messages or beliefs.
  bool warm_start = true;
  MfNonEdgeMass mf_mass = MfNonEdgeMass::kBeliefMass;
  /// Worker threads for restarts; 0 uses the hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

struct EmRestartSummary {
  bool ok = false;
  bool converged = false;
  std::size_t rounds = 0;
  /// Engine value of the last E-step (Bethe or mean-field).
  double free_energy = 0.0;
  /// Log-likelihood per node implied by that value, used for selection.
  double log_likelihood = 0.0;
  std::string error;
};

struct EmResult {
  BlockModel model;
  MarginalSet marginals;
  /// Messages of the selected chain; empty for the mean-field engine.
  MessageSet messages;
  /// Engine free energy after every E-step of the selected chain.
  std::vector<double> free_energy_trace;
  std::size_t selected = 0;
  std::vector<EmRestartSummary> restarts;
};

/// M-step from a BP state: p_r are the belief fractions and
///   c_rs = 1/(N p_r p_s) sum_(ij) c_rs (psi^{i->j}_r psi^{j->i}_s + psi^{i->j}_s psi^{j->i}_r) / Z^ij.
/// Throws NumericalFailure naming the edge when Z^ij vanishes and
/// EstimationError when a class has no belief mass.
BlockModel m_step_bp(const MessageSet& messages, const MarginalSet& marginals, const Graph& graph,
                     const BlockModel& model);

/// M-step from mean-field beliefs: p_rs = sum_{i<j} A_ij psi^i psi^j / sum_{i<j} psi^i psi^j
/// per unordered class pair. Throws EstimationError on a vanished class pair.
BlockModel m_step_mf(const MarginalSet& beliefs, const Graph& graph);

/// Random starting point: c_rr ~ U[c, 3c], c_rs ~ U[0, c] with c = 2M/N, rescaled
/// to mean degree 2M/N; uniform priors.
BlockModel random_affinity_model(const Graph& graph, std::size_t q, Rng& rng);

/// Spectral labels followed by the complete-data estimate.
BlockModel spectral_init(const Graph& graph, std::size_t q, SpectralMethod method,
                         const SpectralOptions& options = {});

/// Log-likelihood per node implied by an engine's free energy: -F for the
/// Bethe value, F / N for the mean-field bound.
double log_likelihood_estimate(EmEngine engine, double free_energy, std::size_t n_nodes);

/// Runs config.restarts independent EM chains and keeps the one with the
/// largest log-likelihood estimate among converged chains (all chains if
/// none converged). Throws NumericalFailure when every chain failed.
EmResult run_em(const Graph& graph, std::size_t q, const EmConfig& config, std::uint64_t seed);

EmEngine parse_em_engine(const std::string& text);
std::string to_string(EmEngine engine);
EmInit parse_em_init(const std::string& text);
std::string to_string(EmInit init);

}  // namespace sbm
