#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/em.hpp"
#include "sbm/embedding.hpp"
#include "sbm/estep.hpp"
#include "sbm/graph.hpp"
#include "sbm/metrics.hpp"
#include "sbm/netcore.hpp"

namespace sbm {

/// `N M` header, then `i j` per edge with i < j.
void write_graph(std::ostream& out, const Graph& graph);
Graph read_graph(std::istream& in);

/// One label per line. When q is not given it is taken as max label + 1.
void write_labels(std::ostream& out, const LabelAssignment& labels);
LabelAssignment read_labels(std::istream& in, std::optional<std::size_t> q = std::nullopt);

/// Lines `q <q>`, `n_scale <N>`, `priors <p_1 .. p_q>`, `affinity`, then q rows of c_rs.
void write_model(std::ostream& out, const BlockModel& model);
BlockModel read_model(std::istream& in);

/// N lines of q tab-separated reals.
void write_marginals(std::ostream& out, const MarginalSet& marginals);
MarginalSet read_marginals(std::istream& in);

/// key=value lines.
void write_report(std::ostream& out, const EngineReport& report);
void write_score(std::ostream& out, const ScoreReport& report);
void write_confusion(std::ostream& out, const std::vector<std::vector<std::size_t>>& counts);

/// Header `d eigenvalues: l_1 .. l_d`, then n lines of d tab-separated reals.
void write_embedding(std::ostream& out, const Embedding& embedding);

/// Model block, `trace` followed by one free energy per line, then key=value summary.
void write_em_result(std::ostream& out, const EmResult& result, EmEngine engine);

/// File wrappers; throw IoError when the path cannot be opened or parsed.
Graph load_graph(const std::filesystem::path& path);
LabelAssignment load_labels(const std::filesystem::path& path,
                            std::optional<std::size_t> q = std::nullopt);
BlockModel load_model(const std::filesystem::path& path);
MarginalSet load_marginals(const std::filesystem::path& path);

/// Opens a file for writing, throwing IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_real(double value);

}  // namespace sbm
