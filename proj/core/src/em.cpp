#include "sbm/em.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "sbm/error.hpp"

namespace sbm {
namespace {

std::vector<double> belief_mass(const MarginalSet& beliefs) {
  std::vector<double> mass(beliefs.cols(), 0.0);
  for (std::size_t i = 0; i < beliefs.rows(); ++i) {
    for (std::size_t r = 0; r < beliefs.cols(); ++r) mass[r] += beliefs(i, r);
  }
  return mass;
}

double max_affinity_change(const BlockModel& a, const BlockModel& b) {
  double delta = 0.0;
  for (std::size_t r = 0; r < a.q(); ++r) {
    for (std::size_t s = 0; s < a.q(); ++s) {
      delta = std::max(delta, std::abs(a.affinity(r, s) - b.affinity(r, s)));
    }
  }
  return delta;
}

struct Chain {
  EmRestartSummary summary;
  BlockModel model;
  MarginalSet marginals;
  MessageSet messages;
  std::vector<double> trace;
};

class ChainRunner {
 public:
  ChainRunner(const Graph& graph, const EmConfig& config) : graph_(graph), config_(config) {}

  Chain run(BlockModel model, std::uint64_t seed) const {
    Chain chain;
    const std::vector<double> fixed_priors = model.priors;
    const LabelAssignment* labels = config_.init_labels ? &*config_.init_labels : nullptr;
    std::optional<BpState> bp;
    std::optional<MfState> mf;

    auto estep = [&](std::size_t round) {
      EstepOptions opts = config_.estep;
      opts.seed = Rng::derive(seed, config_.warm_start ? 0 : round);
      const bool cold = round == 0 || !config_.warm_start;
      if (config_.engine == EmEngine::kBp) {
        auto result = cold ? run_bp(graph_, model, opts, labels)
                           : run_bp(graph_, model, opts,
                                    make_bp_state(graph_, model, std::move(bp->messages)));
        bp = BpState{std::move(result.messages), std::move(result.marginals), {}};
        chain.summary.converged = result.report.converged;
        return result.report.free_energy;
      }
      auto result = cold ? run_mf(graph_, model, opts, labels, config_.mf_mass)
                         : run_mf(graph_, model, opts, std::move(*mf), config_.mf_mass);
      mf = std::move(result.state);
      chain.summary.converged = result.report.converged;
      return result.report.free_energy;
    };

    bool params_converged = false;
    std::size_t round = 0;
    for (; round < config_.max_rounds; ++round) {
      chain.trace.push_back(estep(round));
      BlockModel next = config_.engine == EmEngine::kBp
                            ? m_step_bp(bp->messages, bp->marginals, graph_, model)
                            : m_step_mf(mf->beliefs, graph_);
      if (!config_.learn_priors) next.priors = fixed_priors;
      const double delta = max_affinity_change(next, model);
      model = std::move(next);
      if (delta <= config_.param_tol) {
        params_converged = true;
        ++round;
        break;
      }
    }
    // Final E-step so that marginals and free energy belong to the returned model.
    chain.trace.push_back(estep(round));
    const bool estep_converged = chain.summary.converged;

    chain.summary.ok = true;
    chain.summary.converged = params_converged && estep_converged;
    chain.summary.rounds = round;
    chain.summary.free_energy = chain.trace.back();
    chain.summary.log_likelihood =
        log_likelihood_estimate(config_.engine, chain.summary.free_energy, graph_.n_nodes());
    chain.model = std::move(model);
    if (config_.engine == EmEngine::kBp) {
      chain.marginals = std::move(bp->marginals);
      chain.messages = std::move(bp->messages);
    } else {
      chain.marginals = std::move(mf->beliefs);
    }
    return chain;
  }

 private:
  const Graph& graph_;
  const EmConfig& config_;
};

}  // namespace

void EmConfig::validate() const {
  if (max_rounds == 0) throw InvalidArgument("EM needs at least one round");
  if (restarts == 0) throw InvalidArgument("EM needs at least one restart");
  if (!(param_tol > 0.0)) throw InvalidArgument("EM parameter tolerance must be positive");
  if (!(estep.tol > 0.0)) throw InvalidArgument("E-step tolerance must be positive");
  if (estep.max_iters == 0) throw InvalidArgument("E-step iteration cap must be positive");
  if (init == EmInit::kGiven && !given) throw InvalidArgument("EM init 'given' needs a model");
  if (estep.init == InitMode::kFromLabels && !init_labels) {
    throw InvalidArgument("E-step init from labels needs init_labels");
  }
}

BlockModel m_step_bp(const MessageSet& messages, const MarginalSet& marginals, const Graph& graph,
                     const BlockModel& model) {
  const std::size_t q = model.q();
  const std::size_t n = graph.n_nodes();
  const double dn = static_cast<double>(n);
  const auto mass = belief_mass(marginals);
  for (std::size_t r = 0; r < q; ++r) {
    if (!(mass[r] > 0.0)) {
      throw EstimationError("m_step_bp: class " + std::to_string(r) + " has no belief mass");
    }
  }

  Matrix weight(q, q);
  for (NodeId i = 0; i < n; ++i) {
    for (std::size_t e = graph.first_slot(i); e < graph.first_slot(i) + graph.degree(i); ++e) {
      const NodeId j = graph.target(e);
      if (j < i) continue;
      const auto a = messages.values.row(e);
      const auto b = messages.values.row(graph.reverse(e));
      double z = 0.0;
      for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t s = 0; s < q; ++s) z += model.affinity(r, s) * a[r] * b[s];
      }
      if (!(z > 0.0) || !std::isfinite(z)) {
        throw NumericalFailure("m_step_bp: Z vanishes on edge (" + std::to_string(i) + ", " +
                               std::to_string(j) + ")");
      }
      for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t s = 0; s < q; ++s) {
          weight(r, s) += model.affinity(r, s) * (a[r] * b[s] + a[s] * b[r]) / z;
        }
      }
    }
  }

  BlockModel out{std::vector<double>(q), Matrix(q, q), dn};
  for (std::size_t r = 0; r < q; ++r) out.priors[r] = mass[r] / dn;
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      out.affinity(r, s) = weight(r, s) / (dn * out.priors[r] * out.priors[s]);
    }
  }
  return out;
}

BlockModel m_step_mf(const MarginalSet& psi, const Graph& graph) {
  const std::size_t q = psi.cols();
  const std::size_t n = graph.n_nodes();
  const double dn = static_cast<double>(n);
  const auto mass = belief_mass(psi);

  Matrix self(q, q), edge(q, q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < q; ++r) {
      for (std::size_t s = 0; s < q; ++s) self(r, s) += psi(i, r) * psi(i, s);
    }
  }
  for (const auto& [i, j] : graph.edges()) {
    for (std::size_t r = 0; r < q; ++r) {
      for (std::size_t s = 0; s < q; ++s) edge(r, s) += psi(i, r) * psi(j, s);
    }
  }

  BlockModel out{std::vector<double>(q), Matrix(q, q), dn};
  for (std::size_t r = 0; r < q; ++r) out.priors[r] = mass[r] / dn;
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = r; s < q; ++s) {
      // Unordered class pairs {r, s}: ordered sums count r != s twice.
      const double num = r == s ? edge(r, r) : edge(r, s) + edge(s, r);
      const double den = r == s ? 0.5 * (mass[r] * mass[r] - self(r, r))
                                : mass[r] * mass[s] - self(r, s);
      if (!(den > 0.0)) {
        throw EstimationError("m_step_mf: class pair (" + std::to_string(r) + ", " +
                              std::to_string(s) + ") has no pair mass");
      }
      out.affinity(r, s) = out.affinity(s, r) = std::min(num / den, 1.0) * dn;
    }
  }
  return out;
}

BlockModel random_affinity_model(const Graph& graph, std::size_t q, Rng& rng) {
  if (q == 0) throw InvalidArgument("random_affinity_model: q must be positive");
  const double n = static_cast<double>(graph.n_nodes());
  const double c = graph.mean_degree();
  if (!(c > 0.0)) throw InvalidArgument("random_affinity_model: graph has no edges");
  BlockModel model{std::vector<double>(q, 1.0 / static_cast<double>(q)), Matrix(q, q), n};
  for (std::size_t r = 0; r < q; ++r) {
    model.affinity(r, r) = rng.uniform(c, 3.0 * c);
    for (std::size_t s = r + 1; s < q; ++s) {
      model.affinity(r, s) = model.affinity(s, r) = rng.uniform(0.0, c);
    }
  }
  const double scale = c / model.expected_degree();
  for (auto& v : model.affinity.data()) v = std::min(v * scale, n);
  return model;
}

BlockModel spectral_init(const Graph& graph, std::size_t q, SpectralMethod method,
                         const SpectralOptions& options) {
  return estimate_complete(graph, spectral_cluster(graph, q, method, options));
}

double log_likelihood_estimate(EmEngine engine, double free_energy, std::size_t n_nodes) {
  if (engine == EmEngine::kBp) return -free_energy;
  return free_energy / static_cast<double>(std::max<std::size_t>(n_nodes, 1));
}

EmResult run_em(const Graph& graph, std::size_t q, const EmConfig& config, std::uint64_t seed) {
  config.validate();
  if (q == 0) throw InvalidArgument("run_em: q must be positive");
  if (graph.n_nodes() == 0) throw InvalidArgument("run_em: empty graph");

  std::optional<BlockModel> shared;
  if (config.init == EmInit::kGiven) {
    if (config.given->q() != q) throw InvalidArgument("run_em: given model has wrong q");
    config.given->validate();
    shared = config.given->n_scale == static_cast<double>(graph.n_nodes())
                 ? *config.given
                 : config.given->with_probabilities_at(static_cast<double>(graph.n_nodes()));
  } else if (config.init == EmInit::kSpectral) {
    SpectralOptions spectral = config.spectral;
    spectral.seed = Rng::derive(seed, 7);
    shared = spectral_init(graph, q, config.spectral_method, spectral);
  }

  const std::size_t restarts = config.restarts;
  std::vector<std::optional<Chain>> chains(restarts);
  std::vector<std::string> errors(restarts);
  const ChainRunner runner(graph, config);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < restarts; k = next++) {
      const std::uint64_t chain_seed = Rng::derive(seed, 100 + k);
      try {
        BlockModel start;
        if (shared) {
          start = *shared;
        } else {
          Rng rng(Rng::derive(chain_seed, 1));
          start = random_affinity_model(graph, q, rng);
        }
        chains[k] = runner.run(std::move(start), Rng::derive(chain_seed, 2));
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::size_t threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, restarts);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  EmResult result;
  result.restarts.resize(restarts);
  bool any_converged = false;
  for (std::size_t k = 0; k < restarts; ++k) {
    if (chains[k]) {
      result.restarts[k] = chains[k]->summary;
      any_converged = any_converged || chains[k]->summary.converged;
    } else {
      result.restarts[k].error = errors[k];
    }
  }
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < restarts; ++k) {
    const auto& s = result.restarts[k];
    if (!s.ok || (any_converged && !s.converged)) continue;
    if (!best || s.log_likelihood > result.restarts[*best].log_likelihood) best = k;
  }
  if (!best) {
    std::string message = "run_em: all " + std::to_string(restarts) + " restarts failed";
    for (std::size_t k = 0; k < restarts; ++k) {
      message += "\n  restart " + std::to_string(k) + ": " + errors[k];
    }
    throw NumericalFailure(message);
  }
  Chain& chosen = *chains[*best];
  result.selected = *best;
  result.model = std::move(chosen.model);
  result.marginals = std::move(chosen.marginals);
  result.messages = std::move(chosen.messages);
  result.free_energy_trace = std::move(chosen.trace);
  return result;
}

EmEngine parse_em_engine(const std::string& text) {
  if (text == "bp") return EmEngine::kBp;
  if (text == "mf") return EmEngine::kMf;
  throw InvalidArgument("unknown EM engine '" + text + "' (expected bp or mf)");
}

std::string to_string(EmEngine engine) { return engine == EmEngine::kBp ? "bp" : "mf"; }

EmInit parse_em_init(const std::string& text) {
  if (text == "random_affinity" || text == "random") return EmInit::kRandomAffinity;
  if (text == "spectral" || text == "spectral_init") return EmInit::kSpectral;
  if (text == "given") return EmInit::kGiven;
  throw InvalidArgument("unknown EM init '" + text + "' (expected random_affinity, spectral or given)");
}

std::string to_string(EmInit init) {
  switch (init) {
    case EmInit::kRandomAffinity: return "random_affinity";
    case EmInit::kSpectral: return "spectral";
    case EmInit::kGiven: return "given";
  }
  return "unknown";
}

}  // namespace sbm
