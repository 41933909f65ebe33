#include "sbm/block_model.hpp"

#include <algorithm>
#include <cmath>

#include "sbm/error.hpp"

namespace sbm {

double BlockModel::expected_degree() const noexcept {
  double c = 0.0;
  for (std::size_t r = 0; r < q(); ++r) {
    for (std::size_t s = 0; s < q(); ++s) c += priors[r] * affinity(r, s) * priors[s];
  }
  return c;
}

void BlockModel::validate() const {
  const std::size_t k = q();
  if (k == 0) throw InvalidArgument("block model has no classes");
  if (affinity.rows() != k || affinity.cols() != k) {
    throw InvalidArgument("affinity must be " + std::to_string(k) + "x" + std::to_string(k));
  }
  if (!(n_scale > 0.0)) throw InvalidArgument("block model n_scale must be positive");
  double total = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("priors must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("priors sum to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t s = 0; s < k; ++s) {
      const double c = affinity(r, s);
      if (!(c >= 0.0) || !std::isfinite(c)) {
        throw InvalidArgument("affinity entries must be finite and non-negative");
      }
      if (std::abs(c - affinity(s, r)) > 1e-9 * std::max(1.0, std::abs(c))) {
        throw InvalidArgument("affinity must be symmetric");
      }
      if (c > n_scale * (1.0 + 1e-12)) {
        throw InvalidArgument("affinity c_" + std::to_string(r + 1) + std::to_string(s + 1) +
                              " = " + std::to_string(c) + " exceeds N = " +
                              std::to_string(n_scale) + " (edge probability > 1)");
      }
    }
  }
}

BlockModel BlockModel::with_probabilities_at(double n) const {
  BlockModel out = *this;
  for (auto& c : out.affinity.data()) c *= n / n_scale;
  out.n_scale = n;
  return out;
}

BlockModel BlockModel::permuted(std::span<const std::uint32_t> perm) const {
  BlockModel out = *this;
  for (std::size_t r = 0; r < q(); ++r) {
    out.priors[r] = priors[perm[r]];
    for (std::size_t s = 0; s < q(); ++s) out.affinity(r, s) = affinity(perm[r], perm[s]);
  }
  return out;
}

void LabelAssignment::validate() const {
  if (q == 0) throw InvalidArgument("label assignment with q = 0");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= q) {
      throw InvalidArgument("label of node " + std::to_string(i) + " is " +
                            std::to_string(labels[i] + 1) + ", outside 1.." + std::to_string(q));
    }
  }
}

std::vector<std::size_t> LabelAssignment::class_sizes() const {
  std::vector<std::size_t> sizes(q, 0);
  for (auto t : labels) ++sizes[t];
  return sizes;
}

BlockModel modular_model(std::size_t q, double mean_degree, double epsilon, double n) {
  if (q == 0) throw InvalidArgument("modular preset needs q >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("epsilon must lie in [0, 1]");
  }
  const double kq = static_cast<double>(q);
  const double c_in = kq * mean_degree / (1.0 + (kq - 1.0) * epsilon);
  const double c_out = epsilon * c_in;
  BlockModel m;
  m.priors.assign(q, 1.0 / kq);
  m.affinity = Matrix(q, q, c_out);
  for (std::size_t r = 0; r < q; ++r) m.affinity(r, r) = c_in;
  m.n_scale = n;
  return m;
}

BlockModel core_periphery_model(double mean_degree, double epsilon, double n,
                                CoreIoConvention convention) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("epsilon must lie in [0, 1]");
  }
  const double c_in = 9.0 * mean_degree / (8.0 - epsilon);
  double c_io = 0.0;
  switch (convention) {
    case CoreIoConvention::kMeanDegree: c_io = (1.0 - 0.5 * epsilon) * c_in; break;
    case CoreIoConvention::kEqualDegree: c_io = (2.0 - epsilon) * c_in; break;
    case CoreIoConvention::kAbsolute: c_io = 1.0 - 0.5 * epsilon; break;
  }
  BlockModel m;
  m.priors = {2.0 / 3.0, 1.0 / 3.0};
  m.affinity = Matrix(2, 2);
  m.affinity(0, 0) = c_in;
  m.affinity(0, 1) = m.affinity(1, 0) = c_io;
  m.affinity(1, 1) = epsilon * c_in;
  m.n_scale = n;
  return m;
}

BlockModel uniform_model(std::vector<double> priors, double c, double n) {
  BlockModel m;
  const std::size_t q = priors.size();
  m.priors = std::move(priors);
  m.affinity = Matrix(q, q, c);
  m.n_scale = n;
  return m;
}

BlockModel StructurePreset::expand(double n) const {
  switch (kind) {
    case PresetKind::kModular: return modular_model(q, mean_degree, epsilon, n);
    case PresetKind::kCorePeriphery: return core_periphery_model(mean_degree, epsilon, n, core_io);
    case PresetKind::kCustom: {
      BlockModel m = custom;
      m.n_scale = n;
      return m;
    }
  }
  throw InvalidArgument("unknown preset kind");
}

std::string to_string(PresetKind kind) {
  switch (kind) {
    case PresetKind::kModular: return "modular";
    case PresetKind::kCorePeriphery: return "core_periphery";
    case PresetKind::kCustom: return "custom";
  }
  return "unknown";
}

std::string to_string(CoreIoConvention convention) {
  switch (convention) {
    case CoreIoConvention::kMeanDegree: return "mean_degree";
    case CoreIoConvention::kEqualDegree: return "equal_degree";
    case CoreIoConvention::kAbsolute: return "absolute";
  }
  return "unknown";
}

}  // namespace sbm
