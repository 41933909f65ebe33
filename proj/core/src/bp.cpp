#include "sbm/bp.hpp"

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
// Products below this lose precision; such nodes take the log-space path.
constexpr double kUnderflow = 1e-200;

std::string edge_name(NodeId i, NodeId j) {
  return std::to_string(i) + "->" + std::to_string(j);
}

void check_compatible(const Graph& graph, const BlockModel& model) {
  model.validate();
  (void)graph;
}

// In-place normalization of a row of log-weights into probabilities.
void softmax_inplace(std::span<double> x) noexcept {
  const double top = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (auto& v : x) total += (v = std::exp(v - top));
  for (auto& v : x) v /= total;
}

void set_from_label(std::span<double> row, std::uint32_t label) noexcept {
  const auto q = row.size();
  std::fill(row.begin(), row.end(), kLabelEps);
  row[label] = 1.0 - static_cast<double>(q - 1) * kLabelEps;
}

// Recomputes messages and the marginal of one node. Scratch buffers are
// reused across nodes.
class NodeUpdater {
 public:
  NodeUpdater(const Graph& graph, const BlockModel& model)
      : graph_(graph), model_(model), q_(model.q()) {
    std::size_t max_degree = 0;
    for (NodeId i = 0; i < graph.n_nodes(); ++i) max_degree = std::max(max_degree, graph.degree(i));
    weights_.resize((max_degree + 1) * q_);
    suffix_.resize((max_degree + 1) * q_);
    prefix_.resize(q_);
    base_.resize(q_);
    out_.resize(q_);
    log_total_.resize(q_);
    for (double p : model.priors) log_priors_.push_back(p > 0.0 ? std::log(p) : -HUGE_VAL);
  }

  /// Writes the fresh marginal of node i into `marginal`. When `out` is
  /// given, also rewrites the outgoing messages of i with damping and returns
  /// the largest message change.
  double update(NodeId i, const MessageSet& in, MessageSet* out, double damping,
                std::span<const double> theta, std::span<double> marginal) {
    const std::size_t k = graph_.degree(i);
    const std::size_t first = graph_.first_slot(i);

    double theta_min = theta[0];
    for (std::size_t r = 0; r < q_; ++r) {
      if (!std::isfinite(theta[r])) {
        throw NumericalFailure("bp: non-finite external field at node " + std::to_string(i));
      }
      theta_min = std::min(theta_min, theta[r]);
    }
    for (std::size_t r = 0; r < q_; ++r) {
      base_[r] = model_.priors[r] * std::exp(theta_min - theta[r]);
    }

    // w[e][r] = sum_s c_rs psi^{j->i}_s, scaled by its max over r.
    for (std::size_t e = 0; e < k; ++e) {
      const auto incoming = in.values.row(graph_.reverse(first + e));
      double* w = &weights_[e * q_];
      double top = 0.0;
      for (std::size_t r = 0; r < q_; ++r) {
        double acc = 0.0;
        for (std::size_t s = 0; s < q_; ++s) acc += model_.affinity(r, s) * incoming[s];
        if (!std::isfinite(acc)) {
          throw NumericalFailure("bp: non-finite field on edge " +
                                 edge_name(graph_.target(first + e), i));
        }
        w[r] = std::max(acc, kFloor);
        top = std::max(top, w[r]);
      }
      for (std::size_t r = 0; r < q_; ++r) w[r] /= top;
    }

    if (!product_path(k, first, in, out, damping, marginal)) {
      return log_path(k, first, in, out, damping, marginal, theta);
    }
    return last_delta_;
  }

 private:
  bool product_path(std::size_t k, std::size_t first, const MessageSet& in, MessageSet* out,
                    double damping, std::span<double> marginal) {
    (void)in;
    pending_.clear();
    // suffix[e] = prod_{e' >= e} w[e'].
    std::fill(suffix_.begin() + static_cast<std::ptrdiff_t>(k * q_),
              suffix_.begin() + static_cast<std::ptrdiff_t>((k + 1) * q_), 1.0);
    for (std::size_t e = k; e-- > 0;) {
      for (std::size_t r = 0; r < q_; ++r) {
        suffix_[e * q_ + r] = suffix_[(e + 1) * q_ + r] * weights_[e * q_ + r];
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < q_; ++r) norm += (marginal[r] = base_[r] * suffix_[r]);
    if (!(norm > kUnderflow) || !std::isfinite(norm)) return false;
    for (std::size_t r = 0; r < q_; ++r) marginal[r] /= norm;

    last_delta_ = 0.0;
    if (out == nullptr) return true;
    std::fill(prefix_.begin(), prefix_.end(), 1.0);
    for (std::size_t e = 0; e < k; ++e) {
      double total = 0.0;
      for (std::size_t r = 0; r < q_; ++r) {
        total += (out_[r] = base_[r] * prefix_[r] * suffix_[(e + 1) * q_ + r]);
      }
      if (!(total > kUnderflow) || !std::isfinite(total)) return false;
      for (std::size_t r = 0; r < q_; ++r) prefix_[r] *= weights_[e * q_ + r];
      for (std::size_t r = 0; r < q_; ++r) out_[r] /= total;
      pending_.insert(pending_.end(), out_.begin(), out_.end());
    }
    commit(k, first, out, damping);
    return true;
  }

  double log_path(std::size_t k, std::size_t first, const MessageSet& in, MessageSet* out,
                  double damping, std::span<double> marginal, std::span<const double> theta) {
    (void)in;
    pending_.clear();
    std::fill(log_total_.begin(), log_total_.end(), 0.0);
    for (std::size_t e = 0; e < k; ++e) {
      for (std::size_t r = 0; r < q_; ++r) {
        double& w = weights_[e * q_ + r];
        w = std::log(std::max(w, kFloor));
        log_total_[r] += w;
      }
    }
    for (std::size_t r = 0; r < q_; ++r) marginal[r] = log_priors_[r] + log_total_[r] - theta[r];
    softmax_inplace(marginal);
    last_delta_ = 0.0;
    if (out == nullptr) return 0.0;
    for (std::size_t e = 0; e < k; ++e) {
      for (std::size_t r = 0; r < q_; ++r) {
        out_[r] = log_priors_[r] + log_total_[r] - weights_[e * q_ + r] - theta[r];
      }
      softmax_inplace(out_);
      pending_.insert(pending_.end(), out_.begin(), out_.end());
    }
    commit(k, first, out, damping);
    return last_delta_;
  }

  void commit(std::size_t k, std::size_t first, MessageSet* out, double damping) {
    double delta = 0.0;
    for (std::size_t e = 0; e < k; ++e) {
      auto row = out->values.row(first + e);
      const double* fresh = &pending_[e * q_];
      double total = 0.0;
      for (std::size_t r = 0; r < q_; ++r) {
        const double v = (1.0 - damping) * fresh[r] + damping * row[r];
        out_[r] = v;
        total += v;
      }
      for (std::size_t r = 0; r < q_; ++r) {
        const double v = out_[r] / total;
        delta = std::max(delta, std::abs(v - row[r]));
        row[r] = v;
      }
    }
    pending_.clear();
    last_delta_ = delta;
  }

  const Graph& graph_;
  const BlockModel& model_;
  std::size_t q_;
  std::vector<double> weights_, suffix_, prefix_, base_, out_, log_total_, log_priors_, pending_;
  double last_delta_ = 0.0;
};

}  // namespace

ExternalField::ExternalField(const MarginalSet& marginals, const BlockModel& model) {
  recompute(marginals, model);
}

void ExternalField::recompute(const MarginalSet& marginals, const BlockModel& model) {
  const std::size_t q = model.q();
  mass_.assign(q, 0.0);
  carry_.assign(q, 0.0);
  for (std::size_t i = 0; i < marginals.rows(); ++i) {
    for (std::size_t s = 0; s < q; ++s) mass_[s] += marginals(i, s);
  }
  theta_.assign(q, 0.0);
  refresh_theta(model);
}

void ExternalField::update(std::span<const double> old_belief, std::span<const double> new_belief,
                           const BlockModel& model) noexcept {
  for (std::size_t s = 0; s < mass_.size(); ++s) {
    const double d = new_belief[s] - old_belief[s];
    const double t = mass_[s] + d;
    carry_[s] += std::abs(mass_[s]) >= std::abs(d) ? (mass_[s] - t) + d : (d - t) + mass_[s];
    mass_[s] = t;
  }
  refresh_theta(model);
}

void ExternalField::refresh_theta(const BlockModel& model) noexcept {
  const std::size_t q = theta_.size();
  for (std::size_t r = 0; r < q; ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < q; ++s) acc += model.affinity(r, s) * (mass_[s] + carry_[s]);
    theta_[r] = acc / model.n_scale;
  }
}

MessageSet init_messages(const Graph& graph, const BlockModel& model, InitMode mode,
                         std::uint64_t seed, const LabelAssignment* labels) {
  const std::size_t q = model.q();
  MessageSet m{Matrix(graph.n_slots(), q, 1.0 / static_cast<double>(q))};
  switch (mode) {
    case InitMode::kUniform: break;
    case InitMode::kRandom: {
      Rng rng(seed);
      for (std::size_t e = 0; e < graph.n_slots(); ++e) rng.dirichlet_uniform(m.values.row(e));
      break;
    }
    case InitMode::kFromLabels: {
      if (labels == nullptr || labels->size() != graph.n_nodes() || labels->q != q) {
        throw InvalidArgument("init_messages: from_labels needs a label per node with matching q");
      }
      for (NodeId i = 0; i < graph.n_nodes(); ++i) {
        for (std::size_t e = graph.first_slot(i); e < graph.first_slot(i) + graph.degree(i); ++e) {
          set_from_label(m.values.row(e), labels->labels[i]);
        }
      }
      break;
    }
  }
  return m;
}

BpState make_bp_state(const Graph& graph, const BlockModel& model, MessageSet messages) {
  check_compatible(graph, model);
  const std::size_t q = model.q();
  if (messages.values.rows() != graph.n_slots() || messages.q() != q) {
    throw InvalidArgument("message set does not match graph and model");
  }
  BpState state;
  state.messages = std::move(messages);
  // Provisional beliefs: mean incoming message, priors for isolated nodes.
  state.marginals = Matrix(graph.n_nodes(), q);
  for (NodeId i = 0; i < graph.n_nodes(); ++i) {
    auto row = state.marginals.row(i);
    const std::size_t k = graph.degree(i);
    if (k == 0) {
      std::copy(model.priors.begin(), model.priors.end(), row.begin());
      continue;
    }
    for (std::size_t e = graph.first_slot(i); e < graph.first_slot(i) + k; ++e) {
      const auto in = state.messages.values.row(graph.reverse(e));
      for (std::size_t r = 0; r < q; ++r) row[r] += in[r] / static_cast<double>(k);
    }
  }
  state.field.recompute(state.marginals, model);
  refresh_marginals(state, graph, model);
  return state;
}

void refresh_marginals(BpState& state, const Graph& graph, const BlockModel& model) {
  NodeUpdater updater(graph, model);
  for (NodeId i = 0; i < graph.n_nodes(); ++i) {
    updater.update(i, state.messages, nullptr, 0.0, state.field.values(), state.marginals.row(i));
  }
  state.field.recompute(state.marginals, model);
}

double bp_sweep(BpState& state, const Graph& graph, const BlockModel& model, double damping,
                Rng& rng) {
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must lie in [0, 1)");
  const std::size_t q = model.q();
  NodeUpdater updater(graph, model);
  std::vector<NodeId> order(graph.n_nodes());
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(std::span<NodeId>(order));

  std::vector<double> old_belief(q);
  double max_delta = 0.0;
  for (NodeId i : order) {
    auto belief = state.marginals.row(i);
    std::copy(belief.begin(), belief.end(), old_belief.begin());
    const double delta =
        updater.update(i, state.messages, &state.messages, damping, state.field.values(), belief);
    state.field.update(old_belief, belief, model);
    max_delta = std::max(max_delta, delta);
  }
  return max_delta;
}

BpResult run_bp(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                const LabelAssignment* init_labels) {
  auto messages = init_messages(graph, model, options.init, Rng::derive(options.seed, 11),
                                init_labels);
  return run_bp(graph, model, options, make_bp_state(graph, model, std::move(messages)));
}

BpResult run_bp(const Graph& graph, const BlockModel& model, const EstepOptions& options,
                BpState state) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(Rng::derive(options.seed, 12));
  EngineReport report;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    report.final_delta = bp_sweep(state, graph, model, options.damping, rng);
    report.iterations = it + 1;
    if ((it + 1) % kFieldRefreshPeriod == 0) state.field.recompute(state.marginals, model);
    if (report.final_delta <= options.tol) {
      report.converged = true;
      break;
    }
  }
  refresh_marginals(state, graph, model);
  report.free_energy = bethe_free_energy(state.messages, state.marginals, graph, model);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(state.marginals), std::move(state.messages), report};
}

double bethe_free_energy(const MessageSet& messages, const MarginalSet& marginals,
                         const Graph& graph, const BlockModel& model) {
  const std::size_t q = model.q();
  const std::size_t n = graph.n_nodes();
  if (n == 0) return 0.0;
  const ExternalField field(marginals, model);

  std::vector<double> mass(q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < q; ++r) mass[r] += marginals(i, r);
  }

  double edge_term = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    for (std::size_t e = graph.first_slot(i); e < graph.first_slot(i) + graph.degree(i); ++e) {
      if (graph.target(e) < i) continue;
      const auto a = messages.values.row(e);
      const auto b = messages.values.row(graph.reverse(e));
      double z = 0.0;
      for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t s = 0; s < q; ++s) z += model.affinity(r, s) * a[r] * b[s];
      }
      edge_term += std::log(std::max(z, kFloor));
    }
  }

  // log sum_s p_s exp(h^i_s) with h^i_s = sum_k log(sum_t c_st psi^{k->i}_t) - theta_s.
  double node_term = 0.0;
  std::vector<double> h(q);
  for (NodeId i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < q; ++s) {
      h[s] = (model.priors[s] > 0.0 ? std::log(model.priors[s]) : -HUGE_VAL) - field[s];
    }
    for (std::size_t e = graph.first_slot(i); e < graph.first_slot(i) + graph.degree(i); ++e) {
      const auto in = messages.values.row(graph.reverse(e));
      for (std::size_t s = 0; s < q; ++s) {
        double acc = 0.0;
        for (std::size_t t = 0; t < q; ++t) acc += model.affinity(s, t) * in[t];
        h[s] += std::log(std::max(acc, kFloor));
      }
    }
    const double top = *std::max_element(h.begin(), h.end());
    double total = 0.0;
    for (double v : h) total += std::exp(v - top);
    node_term += top + std::log(total);
  }

  double pair_term = 0.0;  // sum_rs (c_rs / n_scale) n_r n_s / 2, per node below
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) pair_term += model.affinity(r, s) * mass[r] * mass[s];
  }
  pair_term /= 2.0 * model.n_scale;

  const double dn = static_cast<double>(n);
  const double f = edge_term / dn - node_term / dn - pair_term / dn;
  if (!std::isfinite(f)) throw NumericalFailure("bethe_free_energy: non-finite result");
  return f;
}

MarginalSet dense_bp_marginals(const Graph& graph, const BlockModel& model, double tol,
                               std::size_t max_iters, std::uint64_t seed) {
  model.validate();
  const std::size_t n = graph.n_nodes();
  const std::size_t q = model.q();
  if (n > kMaxDenseBpNodes) {
    throw InvalidArgument("dense_bp_marginals: " + std::to_string(n) + " nodes exceeds " +
                          std::to_string(kMaxDenseBpNodes));
  }
  // Pair weights W^{edge}_rs = p_rs and W^{non-edge}_rs = 1 - p_rs.
  Matrix w_edge(q, q), w_non(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      w_edge(r, s) = model.edge_probability(r, s);
      w_non(r, s) = 1.0 - model.edge_probability(r, s);
    }
  }
  std::vector<std::vector<char>> adjacent(n, std::vector<char>(n, 0));
  for (const auto& [i, j] : graph.edges()) adjacent[i][j] = adjacent[j][i] = 1;

  // msg[(i * n + j) * q + r] = psi^{i->j}_r.
  Rng rng(seed);
  std::vector<double> msg(n * n * q);
  for (std::size_t ij = 0; ij < n * n; ++ij) {
    rng.dirichlet_uniform(std::span<double>(&msg[ij * q], q));
  }
  std::vector<double> log_term(n * q), log_total(q), out(q);
  std::vector<double> log_priors(q);
  for (std::size_t r = 0; r < q; ++r) {
    log_priors[r] = model.priors[r] > 0 ? std::log(model.priors[r]) : -HUGE_VAL;
  }

  auto node_terms = [&](std::size_t i) {
    std::fill(log_total.begin(), log_total.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const Matrix& w = adjacent[i][k] ? w_edge : w_non;
      const double* in = &msg[(k * n + i) * q];
      for (std::size_t r = 0; r < q; ++r) {
        double acc = 0.0;
        for (std::size_t s = 0; s < q; ++s) acc += w(r, s) * in[s];
        log_term[k * q + r] = std::log(std::max(acc, kFloor));
        log_total[r] += log_term[k * q + r];
      }
    }
  };

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  for (std::size_t it = 0; it < max_iters; ++it) {
    rng.shuffle(std::span<NodeId>(order));
    double delta = 0.0;
    for (NodeId i : order) {
      node_terms(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t r = 0; r < q; ++r) {
          out[r] = log_priors[r] + log_total[r] - log_term[j * q + r];
        }
        softmax_inplace(out);
        double* dst = &msg[(i * n + j) * q];
        for (std::size_t r = 0; r < q; ++r) {
          delta = std::max(delta, std::abs(dst[r] - out[r]));
          dst[r] = out[r];
        }
      }
    }
    if (delta <= tol) break;
  }

  MarginalSet marginals(n, q);
  for (std::size_t i = 0; i < n; ++i) {
    node_terms(i);
    auto row = marginals.row(i);
    for (std::size_t r = 0; r < q; ++r) row[r] = log_priors[r] + log_total[r];
    softmax_inplace(row);
  }
  return marginals;
}

}  // namespace sbm
