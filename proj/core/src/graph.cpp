#include "sbm/graph.hpp"

#include <algorithm>
#include <string>

#include "sbm/error.hpp"

namespace sbm {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  Graph g;
  g.offsets_.assign(n + 1, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n) {
      throw InvalidArgument("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") out of range for " + std::to_string(n) + " nodes");
    }
    if (a == b) throw InvalidArgument("self-loop at node " + std::to_string(a));
    ++g.offsets_[a + 1];
    ++g.offsets_[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];

  g.neighbors_.resize(2 * edges.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [a, b] : edges) {
    g.neighbors_[cursor[a]++] = b;
    g.neighbors_[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]);
    auto last = g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]);
    std::sort(first, last);
    if (auto dup = std::adjacent_find(first, last); dup != last) {
      throw InvalidArgument("duplicate edge (" + std::to_string(i) + ", " +
                            std::to_string(*dup) + ")");
    }
  }

  // Neighbor lists are sorted, so walking i in increasing order fills the
  // lists of higher-numbered endpoints in increasing order too.
  g.reverse_.resize(g.neighbors_.size());
  std::vector<std::size_t> low_cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (NodeId i = 0; i < n; ++i) {
    for (std::size_t e = g.offsets_[i]; e < g.offsets_[i + 1]; ++e) {
      const NodeId j = g.neighbors_[e];
      if (j < i) continue;
      const std::size_t back = low_cursor[j]++;
      g.reverse_[e] = back;
      g.reverse_[back] = e;
    }
  }
  return g;
}

bool Graph::has_edge(NodeId i, NodeId j) const noexcept {
  if (i >= n_nodes() || j >= n_nodes()) return false;
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

double Graph::mean_degree() const noexcept {
  return n_nodes() == 0 ? 0.0
                        : 2.0 * static_cast<double>(n_edges()) / static_cast<double>(n_nodes());
}

std::vector<Graph::Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(n_edges());
  for (NodeId i = 0; i < n_nodes(); ++i) {
    for (NodeId j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> k(n_nodes());
  for (NodeId i = 0; i < n_nodes(); ++i) k[i] = degree(i);
  return k;
}

std::vector<std::uint32_t> component_ids(const Graph& graph) {
  const std::size_t n = graph.n_nodes();
  constexpr auto kUnseen = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> id(n, kUnseen);
  std::vector<NodeId> stack;
  std::uint32_t next = 0;
  for (NodeId root = 0; root < n; ++root) {
    if (id[root] != kUnseen) continue;
    id[root] = next;
    stack.push_back(root);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : graph.neighbors(u)) {
        if (id[v] == kUnseen) {
          id[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return id;
}

Component largest_connected_component(const Graph& graph) {
  const std::size_t n = graph.n_nodes();
  if (n == 0) throw InvalidArgument("largest_connected_component: empty graph");

  const auto id = component_ids(graph);
  const std::uint32_t n_components = *std::max_element(id.begin(), id.end()) + 1;
  std::vector<std::size_t> size(n_components, 0);
  for (auto c : id) ++size[c];
  // Components are numbered by smallest member, so the first maximum wins ties.
  const auto best = static_cast<std::uint32_t>(
      std::max_element(size.begin(), size.end()) - size.begin());

  Component out;
  out.old_to_new.assign(n, kNoNode);
  for (NodeId i = 0; i < n; ++i) {
    if (id[i] == best) {
      out.old_to_new[i] = static_cast<NodeId>(out.new_to_old.size());
      out.new_to_old.push_back(i);
    }
  }
  std::vector<Graph::Edge> edges;
  for (NodeId i : out.new_to_old) {
    for (NodeId j : graph.neighbors(i)) {
      if (i < j) edges.emplace_back(out.old_to_new[i], out.old_to_new[j]);
    }
  }
  out.graph = Graph::from_edges(out.new_to_old.size(), edges);
  return out;
}

}  // namespace sbm
