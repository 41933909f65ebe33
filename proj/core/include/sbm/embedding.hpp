#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/graph.hpp"
#include "sbm/lanczos.hpp"
#include "sbm/matrix.hpp"

namespace sbm {

enum class EmbeddingKind { kModularity, kDiffusion };

struct Embedding {
  /// n x d coordinates.
  Matrix coords;
  std::vector<double> eigenvalues;
  EmbeddingKind kind = EmbeddingKind::kModularity;
  /// Number of walk steps; zero for modularity embeddings.
  std::size_t diffusion_time = 0;

  std::size_t dim() const noexcept { return eigenvalues.size(); }
};

/// Column r holds the eigenvector of B = A - k k^T / 2M for the r-th largest
/// |lambda|. Throws InvalidArgument when the graph has no edges.
Embedding embed_modularity(const Graph& graph, std::size_t d, const EigenOptions& options = {});

/// Diffusion-map coordinates lambda_r^t v_r, with v_r the right eigenvectors
/// of P = D^{-1} A normalized so that sum_i pi_0(i) v_r(i)^2 = 1. The trivial
/// pair is dropped; pairs with |lambda_r|^t <= delta |lambda_2|^t are
/// discarded. Euclidean distances between rows then approximate the
/// diffusion distance D_t. Throws InvalidArgument on disconnected graphs.
Embedding embed_diffusion(const Graph& graph, std::size_t d, std::size_t t, double delta,
                          const EigenOptions& options = {});

enum class SpectralMethod { kModularity, kDiffusion };

struct SpectralOptions {
  /// Embedding dimension; 0 means q - 1.
  std::size_t dim = 0;
  std::size_t diffusion_time = 3;
  double delta = 1e-3;
  std::size_t kmeans_restarts = 10;
  std::uint64_t seed = 0;
  EigenOptions eigen{};
};

/// Embedding followed by k-means with k = q. The diffusion method works on
/// the largest connected component; other nodes receive the label of the
/// largest cluster. Throws InvalidArgument for q < 2.
LabelAssignment spectral_cluster(const Graph& graph, std::size_t q, SpectralMethod method,
                                 const SpectralOptions& options = {});

SpectralMethod parse_spectral_method(const std::string& text);
std::string to_string(SpectralMethod method);
std::string to_string(EmbeddingKind kind);

}  // namespace sbm
