#include "sbm/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbm/error.hpp"
#include "sbm/kmeans.hpp"
#include "sbm/operators.hpp"
#include "sbm/rng.hpp"

namespace sbm {

Embedding embed_modularity(const Graph& graph, std::size_t d, const EigenOptions& options) {
  const ModularityOperator op(graph);
  auto pairs = top_eigenpairs(op, d, EigenOrder::kLargestMagnitude, options);
  return {std::move(pairs.vectors), std::move(pairs.values), EmbeddingKind::kModularity, 0};
}

Embedding embed_diffusion(const Graph& graph, std::size_t d, std::size_t t, double delta,
                          const EigenOptions& options) {
  if (graph.n_nodes() < 2) throw InvalidArgument("diffusion embedding needs at least two nodes");
  const auto ids = component_ids(graph);
  if (std::any_of(ids.begin(), ids.end(), [](std::uint32_t c) { return c != 0; })) {
    throw InvalidArgument(
        "diffusion embedding needs a connected graph; apply largest_connected_component first");
  }
  if (t == 0) throw InvalidArgument("diffusion time must be positive");
  if (!(delta >= 0.0)) throw InvalidArgument("diffusion precision must be non-negative");
  const std::size_t n = graph.n_nodes();
  const std::size_t count = std::min(d, n - 1);
  if (count == 0) throw InvalidArgument("diffusion embedding dimension must be positive");

  const WalkOperator walk(graph);
  const DeflatedOperator op(walk, walk.trivial_vector());
  const auto pairs = top_eigenpairs(op, count, EigenOrder::kLargestMagnitude, options);

  const double td = static_cast<double>(t);
  const double lead = std::pow(std::abs(pairs.values[0]), td);
  std::size_t kept = 1;
  while (kept < count && std::pow(std::abs(pairs.values[kept]), td) > delta * lead) ++kept;

  const double two_m = 2.0 * static_cast<double>(graph.n_edges());
  Embedding out{Matrix(n, kept), {}, EmbeddingKind::kDiffusion, t};
  out.eigenvalues.assign(pairs.values.begin(), pairs.values.begin() + static_cast<long>(kept));
  for (std::size_t r = 0; r < kept; ++r) {
    const double weight = std::pow(pairs.values[r], td);
    for (NodeId i = 0; i < n; ++i) {
      const double scale = std::sqrt(two_m / static_cast<double>(graph.degree(i)));
      out.coords(i, r) = weight * scale * pairs.vectors(i, r);
    }
  }
  return out;
}

LabelAssignment spectral_cluster(const Graph& graph, std::size_t q, SpectralMethod method,
                                 const SpectralOptions& options) {
  if (q < 2) throw InvalidArgument("spectral clustering needs q >= 2");
  const std::size_t dim = options.dim != 0 ? options.dim : q - 1;
  EigenOptions eigen = options.eigen;
  eigen.seed = Rng::derive(options.seed, 32);
  const std::uint64_t kmeans_seed = Rng::derive(options.seed, 31);

  if (method == SpectralMethod::kModularity) {
    const auto emb = embed_modularity(graph, dim, eigen);
    return kmeans(emb.coords, q, options.kmeans_restarts, kmeans_seed).labels;
  }

  const auto lcc = largest_connected_component(graph);
  const auto emb =
      embed_diffusion(lcc.graph, dim, options.diffusion_time, options.delta, eigen);
  const auto inner = kmeans(emb.coords, q, options.kmeans_restarts, kmeans_seed).labels;
  const auto sizes = inner.class_sizes();
  const auto largest = static_cast<std::uint32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  LabelAssignment out{std::vector<std::uint32_t>(graph.n_nodes(), largest), q};
  for (std::size_t v = 0; v < lcc.new_to_old.size(); ++v) {
    out.labels[lcc.new_to_old[v]] = inner.labels[v];
  }
  return out;
}

SpectralMethod parse_spectral_method(const std::string& text) {
  if (text == "modularity") return SpectralMethod::kModularity;
  if (text == "diffusion") return SpectralMethod::kDiffusion;
  throw InvalidArgument("unknown spectral method '" + text + "' (expected modularity or diffusion)");
}

std::string to_string(SpectralMethod method) {
  return method == SpectralMethod::kModularity ? "modularity" : "diffusion";
}

std::string to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::kModularity ? "modularity" : "diffusion";
}

}  // namespace sbm
