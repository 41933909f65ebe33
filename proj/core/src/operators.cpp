#include "sbm/operators.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "sbm/error.hpp"

namespace sbm {

void AdjacencyOperator::apply(std::span<const double> x, std::span<double> y) const {
  for (NodeId i = 0; i < graph_.n_nodes(); ++i) {
    double acc = 0.0;
    for (NodeId j : graph_.neighbors(i)) acc += x[j];
    y[i] = acc;
  }
}

ModularityOperator::ModularityOperator(const Graph& graph) : graph_(graph) {
  if (graph.n_edges() == 0) throw InvalidArgument("modularity operator needs at least one edge");
  const double two_m = 2.0 * static_cast<double>(graph.n_edges());
  degree_.resize(graph.n_nodes());
  degree_fraction_.resize(graph.n_nodes());
  for (NodeId i = 0; i < graph.n_nodes(); ++i) {
    degree_[i] = static_cast<double>(graph.degree(i));
    degree_fraction_[i] = degree_[i] / two_m;
  }
}

void ModularityOperator::apply(std::span<const double> x, std::span<double> y) const {
  // B x = A x - k (k/2M . x)
  const double projection =
      std::inner_product(degree_fraction_.begin(), degree_fraction_.end(), x.begin(), 0.0);
  for (NodeId i = 0; i < graph_.n_nodes(); ++i) {
    double acc = 0.0;
    for (NodeId j : graph_.neighbors(i)) acc += x[j];
    y[i] = acc - degree_[i] * projection;
  }
}

WalkOperator::WalkOperator(const Graph& graph) : graph_(graph) {
  if (graph.n_nodes() == 0) throw InvalidArgument("walk operator on an empty graph");
  inv_sqrt_degree_.resize(graph.n_nodes());
  for (NodeId i = 0; i < graph.n_nodes(); ++i) {
    if (graph.degree(i) == 0) {
      throw InvalidArgument("walk operator: node " + std::to_string(i) +
                            " is isolated; extract the largest connected component first");
    }
    inv_sqrt_degree_[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(i)));
  }
}

void WalkOperator::apply(std::span<const double> x, std::span<double> y) const {
  for (NodeId i = 0; i < graph_.n_nodes(); ++i) {
    double acc = 0.0;
    for (NodeId j : graph_.neighbors(i)) acc += inv_sqrt_degree_[j] * x[j];
    y[i] = inv_sqrt_degree_[i] * acc;
  }
}

void WalkOperator::apply_transition(std::span<const double> x, std::span<double> y) const {
  for (NodeId i = 0; i < graph_.n_nodes(); ++i) {
    double acc = 0.0;
    for (NodeId j : graph_.neighbors(i)) acc += x[j];
    y[i] = acc / static_cast<double>(graph_.degree(i));
  }
}

void WalkOperator::apply_transition_transpose(std::span<const double> x,
                                              std::span<double> y) const {
  for (NodeId j = 0; j < graph_.n_nodes(); ++j) {
    double acc = 0.0;
    for (NodeId i : graph_.neighbors(j)) acc += x[i] / static_cast<double>(graph_.degree(i));
    y[j] = acc;
  }
}

std::vector<double> WalkOperator::stationary() const {
  const double two_m = 2.0 * static_cast<double>(graph_.n_edges());
  std::vector<double> pi(graph_.n_nodes());
  for (NodeId i = 0; i < graph_.n_nodes(); ++i) {
    pi[i] = static_cast<double>(graph_.degree(i)) / two_m;
  }
  return pi;
}

std::vector<double> WalkOperator::trivial_vector() const {
  auto u = stationary();
  for (auto& v : u) v = std::sqrt(v);
  return u;
}

void DeflatedOperator::apply(std::span<const double> x, std::span<double> y) const {
  const double ux = std::inner_product(u_.begin(), u_.end(), x.begin(), 0.0);
  for (std::size_t i = 0; i < u_.size(); ++i) scratch_[i] = x[i] - ux * u_[i];
  base_.apply(scratch_, y);
  const double uy = std::inner_product(u_.begin(), u_.end(), y.begin(), 0.0);
  for (std::size_t i = 0; i < u_.size(); ++i) y[i] -= uy * u_[i];
}

}  // namespace sbm
