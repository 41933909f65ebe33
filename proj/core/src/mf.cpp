#include "sbm/mf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "sbm/error.hpp"

namespace sbm {
namespace {

constexpr double kFloor = 1e-300;
constexpr double kLabelEps = 1e-3;

struct MfCoefficients {
  Matrix log_odds;     // log(p_rs / (1 - p_rs))
  Matrix log_absent;   // log(1 - p_rs)
  std::vector<double> log_priors;
};

MfCoefficients coefficients(const BlockModel& model) {
  const std::size_t q = model.q();
  MfCoefficients k{Matrix(q, q), Matrix(q, q), std::vector<double>(q)};
  const double n = model.n_scale;
  for (std::size_t r = 0; r < q; ++r) {
    k.log_priors[r] = std::log(std::max(model.priors[r], kFloor));
    for (std::size_t s = 0; s < q; ++s) {
      const double c = model.affinity(r, s);
      k.log_odds(r, s) = std::log(std::max(c, kFloor)) - std::log(std::max(n - c, kFloor));
      k.log_absent(r, s) = std::log(std::max(1.0 - c / n, kFloor));
    }
  }
  return k;
}

}  // namespace

void MfState::recompute_mass() {
  mass.assign(beliefs.cols(), 0.0);
  for (std::size_t i = 0; i < beliefs.rows(); ++i) {
    for (std::size_t r = 0; r < beliefs.cols(); ++r) mass[r] += beliefs(i, r);
  }
}

MfState make_mf_state(MarginalSet beliefs) {
  MfState state{std::move(beliefs), {}};
  state.recompute_mass();
  return state;
}

MfState init_mf_state(const Graph& graph, const BlockModel& model, InitMode mode,
                      std::uint64_t seed, const LabelAssignment* labels) {
  const std::size_t q = model.q();
  const std::size_t n = graph.n_nodes();
  MarginalSet beliefs(n, q, 1.0 / static_cast<double>(q));
  switch (mode) {
    case InitMode::kUniform: break;
    case InitMode::kRandom: {
      Rng rng(seed);
      for (std::size_t i = 0; i < n; ++i) rng.dirichlet_uniform(beliefs.row(i));
      break;
    }
    case InitMode::kFromLabels: {
      if (labels == nullptr || labels->size() != n || labels->q != q) {
        throw InvalidArgument("init_mf_state: from_labels needs a label per node with matching q");
      }
      for (std::size_t i = 0; i < n; ++i) {
        auto row = beliefs.row(i);
        std::fill(row.begin(), row.end(), kLabelEps);
        row[labels->labels[i]] = 1.0 - static_cast<double>(q - 1) * kLabelEps;
      }
      break;
    }
  }
  return make_mf_state(std::move(beliefs));
}

double mf_sweep(MfState& state, const Graph& graph, const BlockModel& model, double damping,
                Rng& rng, MfNonEdgeMass mass_mode) {
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must lie in [0, 1)");
  const std::size_t q = model.q();
  const std::size_t n = graph.n_nodes();
  const double dn = static_cast<double>(n);
  const auto k = coefficients(model);

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(std::span<NodeId>(order));

  std::vector<double> neighbor_mass(q), h(q), fresh(q);
  double max_delta = 0.0;
  for (NodeId i : order) {
    std::fill(neighbor_mass.begin(), neighbor_mass.end(), 0.0);
    for (NodeId j : graph.neighbors(i)) {
      const auto psi = state.beliefs.row(j);
      for (std::size_t s = 0; s < q; ++s) neighbor_mass[s] += psi[s];
    }
    auto belief = state.beliefs.row(i);
    for (std::size_t r = 0; r < q; ++r) {
      double field = 0.0;
      for (std::size_t s = 0; s < q; ++s) {
        double absent = 0.0;
        switch (mass_mode) {
          case MfNonEdgeMass::kBeliefMass:
            absent = (dn - (r == s ? 1.0 : 0.0)) * state.mass[s] / dn;
            break;
          case MfNonEdgeMass::kPrior:
            absent = (dn - (r == s ? 1.0 : 0.0)) * model.priors[s];
            break;
          case MfNonEdgeMass::kCavity:
            absent = state.mass[s] - belief[s];
            break;
        }
        field += k.log_odds(r, s) * neighbor_mass[s] + absent * k.log_absent(r, s);
      }
      if (!std::isfinite(field)) {
        throw NumericalFailure("mf: non-finite field at node " + std::to_string(i));
      }
      h[r] = k.log_priors[r] + field;
    }
    const double top = *std::max_element(h.begin(), h.end());
    double total = 0.0;
    for (std::size_t r = 0; r < q; ++r) total += (fresh[r] = std::exp(h[r] - top));
    double damped_total = 0.0;
    for (std::size_t r = 0; r < q; ++r) {
      fresh[r] = (1.0 - damping) * fresh[r] / total + damping * belief[r];
      damped_total += fresh[r];
    }
    for (std::size_t r = 0; r < q; ++r) {
      const double v = fresh[r] / damped_total;
      max_delta = std::max(max_delta, std::abs(v - belief[r]));
      state.mass[r] += v - belief[r];
      belief[r] = v;
    }
  }
  return max_delta;
}

double mf_free_energy(const MfState& state, const Graph& graph, const BlockModel& model) {
  const std::size_t q = model.q();
  const std::size_t n = graph.n_nodes();
  const auto k = coefficients(model);
  const MarginalSet& psi = state.beliefs;

  double edge_part = 0.0;
  for (const auto& [i, j] : graph.edges()) {
    for (std::size_t r = 0; r < q; ++r) {
      for (std::size_t s = 0; s < q; ++s) edge_part += k.log_odds(r, s) * psi(i, r) * psi(j, s);
    }
  }

  // sum_{i<j} psi^i_r psi^j_s = (m_r m_s - sum_i psi^i_r psi^i_s) / 2
  std::vector<double> mass(q, 0.0);
  Matrix self(q, q);
  double entropy_part = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < q; ++r) {
      const double a = psi(i, r);
      mass[r] += a;
      for (std::size_t s = 0; s < q; ++s) self(r, s) += a * psi(i, s);
      if (a > 0.0) entropy_part += a * (k.log_priors[r] - std::log(a));
    }
  }
  double pair_part = 0.0;
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      pair_part += k.log_absent(r, s) * 0.5 * (mass[r] * mass[s] - self(r, s));
    }
  }
  return edge_part + pair_part + entropy_part;
}

MfResult run_mf(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                const LabelAssignment* init_labels, MfNonEdgeMass mass_mode) {
  auto state = init_mf_state(graph, model, options.init, Rng::derive(options.seed, 21),
                             init_labels);
  return run_mf(graph, model, options, std::move(state), mass_mode);
}

MfResult run_mf(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                MfState state, MfNonEdgeMass mass_mode) {
  model.validate();
  if (state.beliefs.rows() != graph.n_nodes() || state.beliefs.cols() != model.q()) {
    throw InvalidArgument("mean-field state does not match graph and model");
  }
  const auto start = std::chrono::steady_clock::now();
  Rng rng(Rng::derive(options.seed, 22));
  EngineReport report;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    report.final_delta = mf_sweep(state, graph, model, options.damping, rng, mass_mode);
    report.iterations = it + 1;
    if ((it + 1) % 100 == 0) state.recompute_mass();
    if (report.final_delta <= options.tol) {
      report.converged = true;
      break;
    }
  }
  state.recompute_mass();
  report.free_energy = mf_free_energy(state, graph, model);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(state), report};
}

}  // namespace sbm
