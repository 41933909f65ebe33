#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "sbm/error.hpp"
#include "sbm/netcore.hpp"
#include "sbm/rng.hpp"

namespace sbm {
namespace {

constexpr std::uint64_t pair_key(NodeId a, NodeId b) noexcept {
  return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
}

// Above this density the pairs of a block are visited one by one; below it
// the binomial count is placed by rejection, which stays O(count).
constexpr double kDenseBlock = 0.25;

void sample_block(const std::vector<NodeId>& left, const std::vector<NodeId>& right, bool same,
                  double p, Rng& rng, std::vector<Graph::Edge>& edges) {
  const std::uint64_t nl = left.size();
  const std::uint64_t nr = right.size();
  const std::uint64_t pairs = same ? nl * (nl - (nl > 0 ? 1 : 0)) / 2 : nl * nr;
  if (pairs == 0 || p <= 0.0) return;

  if (p >= kDenseBlock) {
    for (std::size_t a = 0; a < nl; ++a) {
      for (std::size_t b = same ? a + 1 : 0; b < nr; ++b) {
        if (rng.uniform() < p) edges.emplace_back(left[a], right[b]);
      }
    }
    return;
  }

  const std::uint64_t count = rng.binomial(pairs, p);
  std::unordered_set<std::uint64_t> placed;
  placed.reserve(static_cast<std::size_t>(count) * 2);
  while (placed.size() < count) {
    const NodeId u = left[rng.below(nl)];
    const NodeId v = right[rng.below(nr)];
    if (u == v) continue;
    if (placed.insert(pair_key(u, v)).second) edges.emplace_back(u, v);
  }
}

}  // namespace

Instance generate(const BlockModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  const std::size_t q = model.q();
  const double dn = static_cast<double>(n);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      if (model.affinity(r, s) > dn) {
        throw InvalidArgument("generate: c_" + std::to_string(r + 1) + std::to_string(s + 1) +
                              " = " + std::to_string(model.affinity(r, s)) +
                              " exceeds n = " + std::to_string(n));
      }
    }
  }

  Rng label_rng(Rng::derive(seed, 1));
  Instance out;
  out.labels.q = q;
  out.labels.labels.resize(n);
  std::vector<double> cumulative(q);
  double acc = 0.0;
  for (std::size_t r = 0; r < q; ++r) cumulative[r] = (acc += model.priors[r]);
  std::vector<std::vector<NodeId>> members(q);
  for (NodeId i = 0; i < n; ++i) {
    const double u = label_rng.uniform() * acc;
    auto r = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    r = std::min(r, q - 1);
    while (model.priors[r] == 0.0 && r > 0) --r;
    out.labels.labels[i] = static_cast<std::uint32_t>(r);
    members[r].push_back(i);
  }

  Rng edge_rng(Rng::derive(seed, 2));
  std::vector<Graph::Edge> edges;
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = r; s < q; ++s) {
      sample_block(members[r], members[s], r == s, model.affinity(r, s) / dn, edge_rng, edges);
    }
  }
  out.graph = Graph::from_edges(n, edges);
  return out;
}

namespace {

struct BlockCounts {
  std::vector<std::size_t> sizes;
  Matrix edges;  // symmetric; e_rs counts r-s edges once
};

BlockCounts count_blocks(const Graph& graph, const LabelAssignment& labels) {
  if (labels.size() != graph.n_nodes()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) +
                          " does not match node count " + std::to_string(graph.n_nodes()));
  }
  labels.validate();
  BlockCounts bc{labels.class_sizes(), Matrix(labels.q, labels.q)};
  for (const auto& [i, j] : graph.edges()) {
    const auto r = labels.labels[i];
    const auto s = labels.labels[j];
    bc.edges(r, s) += 1.0;
    if (r != s) bc.edges(s, r) += 1.0;
  }
  return bc;
}

double block_pairs(const BlockCounts& bc, std::size_t r, std::size_t s) {
  const auto nr = static_cast<double>(bc.sizes[r]);
  const auto ns = static_cast<double>(bc.sizes[s]);
  return r == s ? nr * (nr - 1.0) / 2.0 : nr * ns;
}

}  // namespace

BlockModel estimate_complete(const Graph& graph, const LabelAssignment& labels) {
  const auto bc = count_blocks(graph, labels);
  const std::size_t q = labels.q;
  const auto n = static_cast<double>(graph.n_nodes());
  for (std::size_t r = 0; r < q; ++r) {
    if (bc.sizes[r] == 0) {
      throw EstimationError("estimate_complete: class " + std::to_string(r) + " is empty");
    }
  }
  BlockModel m;
  m.n_scale = n;
  m.priors.resize(q);
  m.affinity = Matrix(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    m.priors[r] = static_cast<double>(bc.sizes[r]) / n;
    for (std::size_t s = 0; s < q; ++s) {
      // (1 + delta_rs) / (n_r (n_s - delta_rs)) * e_rs
      const double nr = static_cast<double>(bc.sizes[r]);
      const double ns_minus = static_cast<double>(bc.sizes[s]) - (r == s ? 1.0 : 0.0);
      const double p = ns_minus > 0.0 ? (r == s ? 2.0 : 1.0) * bc.edges(r, s) / (nr * ns_minus)
                                      : 0.0;
      m.affinity(r, s) = n * p;
    }
  }
  return m;
}

double complete_log_likelihood(const Graph& graph, const LabelAssignment& labels,
                               const BlockModel& model) {
  const auto bc = count_blocks(graph, labels);
  const std::size_t q = model.q();
  if (labels.q != q) throw InvalidArgument("label q does not match model q");
  double ll = 0.0;
  for (std::size_t r = 0; r < q; ++r) {
    if (bc.sizes[r] > 0) ll += static_cast<double>(bc.sizes[r]) * std::log(model.priors[r]);
    for (std::size_t s = r; s < q; ++s) {
      const double p = model.edge_probability(r, s);
      const double e = bc.edges(r, s);
      const double non_edges = block_pairs(bc, r, s) - e;
      if (e > 0) ll += e * std::log(p);
      if (non_edges > 0) ll += non_edges * std::log1p(-p);
    }
  }
  return ll;
}

ExactPosterior exact_posterior(const Graph& graph, const BlockModel& model) {
  model.validate();
  const std::size_t n = graph.n_nodes();
  const std::size_t q = model.q();
  if (std::pow(static_cast<double>(q), static_cast<double>(n)) > kMaxExactAssignments) {
    throw InstanceTooLarge("exact_posterior: q^N = " + std::to_string(q) + "^" +
                           std::to_string(n) + " exceeds the limit of " +
                           std::to_string(static_cast<long long>(kMaxExactAssignments)) +
                           " assignments");
  }

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Matrix log_edge(q, q), log_non_edge(q, q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) {
      const double p = model.edge_probability(r, s);
      log_edge(r, s) = p > 0.0 ? std::log(p) : kNegInf;
      log_non_edge(r, s) = p < 1.0 ? std::log1p(-p) : kNegInf;
    }
  }
  std::vector<double> log_prior(q);
  for (std::size_t r = 0; r < q; ++r) {
    log_prior[r] = model.priors[r] > 0.0 ? std::log(model.priors[r]) : kNegInf;
  }
  std::vector<std::vector<char>> adjacent(n, std::vector<char>(n, 0));
  for (const auto& [i, j] : graph.edges()) adjacent[i][j] = adjacent[j][i] = 1;

  ExactPosterior out;
  out.marginals = Matrix(n, q);
  if (n == 0) return out;

  // Depth-first enumeration: partial[k] is the log weight of nodes 0..k-1.
  std::vector<std::uint32_t> t(n, 0);
  std::vector<double> partial(n + 1, 0.0);
  double reference = kNegInf;
  double total = 0.0;

  auto accumulate_leaf = [&](double lw) {
    if (lw == kNegInf) return;
    if (lw > reference) {
      const double scale = reference == kNegInf ? 0.0 : std::exp(reference - lw);
      total *= scale;
      for (auto& x : out.marginals.data()) x *= scale;
      reference = lw;
    }
    const double w = std::exp(lw - reference);
    total += w;
    for (std::size_t i = 0; i < n; ++i) out.marginals(i, t[i]) += w;
  };

  std::size_t depth = 0;
  t[0] = 0;
  for (;;) {
    // Extend node `depth` with its current label.
    double lw = partial[depth] + log_prior[t[depth]];
    for (std::size_t j = 0; j < depth && lw != kNegInf; ++j) {
      lw += adjacent[j][depth] ? log_edge(t[j], t[depth]) : log_non_edge(t[j], t[depth]);
    }
    partial[depth + 1] = lw;
    if (depth + 1 < n && lw != kNegInf) {
      ++depth;
      t[depth] = 0;
      continue;
    }
    if (depth + 1 == n) accumulate_leaf(lw);
    // Advance to the next label, backtracking over exhausted levels.
    while (t[depth] + 1 == q) {
      if (depth == 0) goto done;
      --depth;
    }
    ++t[depth];
  }
done:
  if (!(total > 0.0)) {
    throw NumericalFailure("exact_posterior: every assignment has zero probability");
  }
  for (auto& x : out.marginals.data()) x /= total;
  out.log_likelihood = reference + std::log(total);
  return out;
}

}  // namespace sbm
