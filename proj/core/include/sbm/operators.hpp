#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sbm/graph.hpp"

namespace sbm {

/// Matrix-free real symmetric operator.
class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;
  virtual std::size_t dim() const noexcept = 0;
  /// y = Op x; x and y do not alias.
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

/// Plain adjacency matrix A.
class AdjacencyOperator final : public SymmetricOperator {
 public:
  explicit AdjacencyOperator(const Graph& graph) : graph_(graph) {}
  std::size_t dim() const noexcept override { return graph_.n_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const Graph& graph_;
};

/// B = A - k k^T / 2M, applied without materializing the dense rank-one part.
class ModularityOperator final : public SymmetricOperator {
 public:
  /// Throws InvalidArgument when the graph has no edges.
  explicit ModularityOperator(const Graph& graph);
  std::size_t dim() const noexcept override { return graph_.n_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

  /// k_i / 2M.
  std::span<const double> degree_fraction() const noexcept { return degree_fraction_; }

 private:
  const Graph& graph_;
  std::vector<double> degree_fraction_;
  std::vector<double> degree_;
};

/// Random walk P = D^{-1} A on a graph without isolated nodes.
///
/// apply() is the symmetrized form D^{-1/2} A D^{-1/2}, which shares the
/// spectrum of P; a right eigenvector of P is D^{-1/2} times an eigenvector
/// of the symmetrized form.
class WalkOperator final : public SymmetricOperator {
 public:
  /// Throws InvalidArgument on empty graphs or isolated nodes.
  explicit WalkOperator(const Graph& graph);
  std::size_t dim() const noexcept override { return graph_.n_nodes(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

  /// y = P x.
  void apply_transition(std::span<const double> x, std::span<double> y) const;
  /// y = P^T x, i.e. one step of a distribution row vector.
  void apply_transition_transpose(std::span<const double> x, std::span<double> y) const;

  /// pi_0 = k / 2M.
  std::vector<double> stationary() const;
  /// Unit eigenvector of the symmetrized form for eigenvalue 1: sqrt(k / 2M).
  std::vector<double> trivial_vector() const;
  std::span<const double> inv_sqrt_degree() const noexcept { return inv_sqrt_degree_; }

 private:
  const Graph& graph_;
  std::vector<double> inv_sqrt_degree_;
};

/// (I - u u^T) Op (I - u u^T) for a unit vector u, removing a known eigenpair.
class DeflatedOperator final : public SymmetricOperator {
 public:
  DeflatedOperator(const SymmetricOperator& base, std::vector<double> unit_vector)
      : base_(base), u_(std::move(unit_vector)), scratch_(u_.size()) {}
  std::size_t dim() const noexcept override { return base_.dim(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const SymmetricOperator& base_;
  std::vector<double> u_;
  mutable std::vector<double> scratch_;
};

}  // namespace sbm
