#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sbm {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

/// Undirected simple graph in compressed neighbor-list form.
///
/// Every undirected edge {i, j} occupies one slot in the list of i and one in
/// the list of j. Slots double as directed-edge ids: slot e in the list of i
/// pointing at j is the directed edge i -> j, and reverse(e) is the slot of
/// j -> i. Neighbor lists are sorted ascending. Immutable after construction.
class Graph {
 public:
  using Edge = std::pair<NodeId, NodeId>;

  Graph() = default;

  /// Builds a graph on `n` nodes. Throws InvalidArgument on self-loops,
  /// duplicate edges or endpoints out of range.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t n_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t n_edges() const noexcept { return neighbors_.size() / 2; }
  std::size_t n_slots() const noexcept { return neighbors_.size(); }

  std::size_t degree(NodeId i) const noexcept { return offsets_[i + 1] - offsets_[i]; }
  std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {neighbors_.data() + offsets_[i], degree(i)};
  }
  /// First directed-edge slot of node i; slots of i are [first_slot(i), first_slot(i+1)).
  std::size_t first_slot(NodeId i) const noexcept { return offsets_[i]; }
  NodeId target(std::size_t slot) const noexcept { return neighbors_[slot]; }
  std::size_t reverse(std::size_t slot) const noexcept { return reverse_[slot]; }

  bool has_edge(NodeId i, NodeId j) const noexcept;

  /// Mean degree 2M/N.
  double mean_degree() const noexcept;

  /// Edge list with i < j, sorted lexicographically.
  std::vector<Edge> edges() const;

  std::vector<std::size_t> degrees() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<std::size_t> reverse_;
};

/// Induced subgraph on the largest connected component.
struct Component {
  Graph graph;
  /// old index -> new index, kNoNode for nodes outside the component.
  std::vector<NodeId> old_to_new;
  /// new index -> old index.
  std::vector<NodeId> new_to_old;
};

/// Ties between equally large components go to the one whose smallest
/// node index is smallest. Throws InvalidArgument on an empty graph.
Component largest_connected_component(const Graph& graph);

/// Connected component id per node, numbered in order of smallest member.
std::vector<std::uint32_t> component_ids(const Graph& graph);

}  // namespace sbm
