#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbm/matrix.hpp"

namespace sbm {

/// Stochastic block model parameters in scaled form.
///
/// The affinity c_rs relates to the edge probability through p_rs = c_rs / N
/// where N is `n_scale`. Dense probabilities are converted at the boundary.
struct BlockModel {
  std::vector<double> priors;
  Matrix affinity;
  double n_scale = 0.0;

  std::size_t q() const noexcept { return priors.size(); }

  /// p_rs = c_rs / n_scale.
  double edge_probability(std::size_t r, std::size_t s) const noexcept {
    return affinity(r, s) / n_scale;
  }

  /// Expected degree sum_rs p_r c_rs p_s.
  double expected_degree() const noexcept;

  /// Throws InvalidArgument if priors do not sum to one, entries are
  /// negative, the affinity is asymmetric or p_rs exceeds one.
  void validate() const;

  /// Same model rescaled to a new N keeping p_rs fixed.
  BlockModel with_probabilities_at(double n) const;

  /// Relabels classes: class r of the result is class perm[r] of this model.
  BlockModel permuted(std::span<const std::uint32_t> perm) const;

  friend bool operator==(const BlockModel&, const BlockModel&) = default;
};

/// Hidden class of every node, 0-based.
struct LabelAssignment {
  std::vector<std::uint32_t> labels;
  std::size_t q = 0;

  std::size_t size() const noexcept { return labels.size(); }
  void validate() const;
  /// Node counts per class.
  std::vector<std::size_t> class_sizes() const;

  friend bool operator==(const LabelAssignment&, const LabelAssignment&) = default;
};

/// How the periphery-core affinity of the core-periphery preset is read.
enum class CoreIoConvention {
  /// c_io = (1 - eps/2) c_in; mean degree equals c.
  kMeanDegree,
  /// c_io = (2 - eps) c_in; core and periphery have equal expected degree.
  kEqualDegree,
  /// c_io = 1 - eps/2 taken as an absolute affinity.
  kAbsolute,
};

enum class PresetKind { kModular, kCorePeriphery, kCustom };

struct StructurePreset {
  PresetKind kind = PresetKind::kModular;
  std::size_t q = 4;
  double mean_degree = 16.0;
  double epsilon = 0.2;
  CoreIoConvention core_io = CoreIoConvention::kAbsolute;
  /// Only used by kCustom; the affinity is kept in scaled form.
  BlockModel custom;

  /// Expands to a concrete model scaled for `n` nodes.
  BlockModel expand(double n) const;
};

/// q equal classes, c_rr = c_in, c_rs = eps c_in with c_in (1 + (q-1) eps)/q = c.
BlockModel modular_model(std::size_t q, double mean_degree, double epsilon, double n);

/// Two classes of sizes 2/3 and 1/3; c_in = 9c/(8 - eps), c_out = eps c_in,
/// c_io according to `convention`.
BlockModel core_periphery_model(double mean_degree, double epsilon, double n,
                                CoreIoConvention convention = CoreIoConvention::kAbsolute);

/// Uniform affinity c for every class pair.
BlockModel uniform_model(std::vector<double> priors, double c, double n);

std::string to_string(PresetKind kind);
std::string to_string(CoreIoConvention convention);

}  // namespace sbm
