#include "sbm/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sbm/error.hpp"

namespace sbm {
namespace {

template <class T>
T parse_number(const std::string& token, const char* what) {
  T value{};
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError(std::string("cannot parse ") + what + " from '" + token + "'");
  }
  return value;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream stream(line);
  for (std::string t; stream >> t;) tokens.push_back(t);
  return tokens;
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return true;
  }
  return false;
}

template <class F>
auto load(const std::filesystem::path& path, F&& parse) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return parse(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string format_real(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return ec == std::errc() ? std::string(buffer, ptr) : std::string("nan");
}

void write_graph(std::ostream& out, const Graph& graph) {
  out << graph.n_nodes() << ' ' << graph.n_edges() << '\n';
  for (const auto& [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

Graph read_graph(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line)) throw IoError("graph file is empty");
  const auto header = split(line);
  if (header.size() != 2) throw IoError("graph header must be 'N M'");
  const auto n = parse_number<std::size_t>(header[0], "node count");
  const auto m = parse_number<std::size_t>(header[1], "edge count");
  std::vector<Graph::Edge> edges;
  edges.reserve(m);
  while (next_data_line(in, line)) {
    const auto t = split(line);
    if (t.size() != 2) throw IoError("edge line must be 'i j': '" + line + "'");
    edges.emplace_back(parse_number<NodeId>(t[0], "node id"), parse_number<NodeId>(t[1], "node id"));
  }
  if (edges.size() != m) {
    throw IoError("graph header announces " + std::to_string(m) + " edges, found " +
                  std::to_string(edges.size()));
  }
  try {
    return Graph::from_edges(n, edges);
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
}

void write_labels(std::ostream& out, const LabelAssignment& labels) {
  for (auto t : labels.labels) out << t << '\n';
}

LabelAssignment read_labels(std::istream& in, std::optional<std::size_t> q) {
  LabelAssignment out;
  std::string line;
  std::uint32_t top = 0;
  while (next_data_line(in, line)) {
    const auto t = split(line);
    if (t.size() != 1) throw IoError("label line must hold one integer: '" + line + "'");
    out.labels.push_back(parse_number<std::uint32_t>(t[0], "label"));
    top = std::max(top, out.labels.back());
  }
  out.q = q ? *q : (out.labels.empty() ? 0 : top + 1);
  try {
    out.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
  return out;
}

void write_model(std::ostream& out, const BlockModel& model) {
  const std::size_t q = model.q();
  out << "q " << q << '\n' << "n_scale " << format_real(model.n_scale) << '\n' << "priors";
  for (double p : model.priors) out << ' ' << format_real(p);
  out << "\naffinity\n";
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t s = 0; s < q; ++s) out << (s ? " " : "") << format_real(model.affinity(r, s));
    out << '\n';
  }
}

BlockModel read_model(std::istream& in) {
  std::optional<std::size_t> q;
  BlockModel model;
  bool have_priors = false;
  bool have_affinity = false;
  std::string line;
  while (next_data_line(in, line)) {
    const auto t = split(line);
    const std::string& key = t[0];
    if (key == "q") {
      if (t.size() != 2) throw IoError("model: 'q' takes one value");
      q = parse_number<std::size_t>(t[1], "q");
      if (*q == 0) throw IoError("model: q must be positive");
    } else if (key == "n_scale") {
      if (t.size() != 2) throw IoError("model: 'n_scale' takes one value");
      model.n_scale = parse_number<double>(t[1], "n_scale");
    } else if (key == "priors") {
      if (!q || t.size() != *q + 1) throw IoError("model: 'priors' needs q values after 'q'");
      for (std::size_t r = 0; r < *q; ++r) model.priors.push_back(parse_number<double>(t[r + 1], "prior"));
      have_priors = true;
    } else if (key == "affinity") {
      if (!q) throw IoError("model: 'affinity' before 'q'");
      model.affinity = Matrix(*q, *q);
      for (std::size_t r = 0; r < *q; ++r) {
        if (!next_data_line(in, line)) throw IoError("model: affinity has fewer than q rows");
        const auto row = split(line);
        if (row.size() != *q) throw IoError("model: affinity row must hold q values");
        for (std::size_t s = 0; s < *q; ++s) model.affinity(r, s) = parse_number<double>(row[s], "affinity");
      }
      have_affinity = true;
    } else {
      throw IoError("model: unknown key '" + key + "'");
    }
  }
  if (!q || !have_priors || !have_affinity || !(model.n_scale > 0.0)) {
    throw IoError("model file needs q, n_scale, priors and affinity");
  }
  try {
    model.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(e.what());
  }
  return model;
}

void write_marginals(std::ostream& out, const MarginalSet& marginals) {
  for (std::size_t i = 0; i < marginals.rows(); ++i) {
    for (std::size_t r = 0; r < marginals.cols(); ++r) {
      out << (r ? "\t" : "") << format_real(marginals(i, r));
    }
    out << '\n';
  }
}

MarginalSet read_marginals(std::istream& in) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (next_data_line(in, line)) {
    const auto t = split(line);
    if (rows == 0) cols = t.size();
    if (t.size() != cols) throw IoError("marginals: ragged row " + std::to_string(rows + 1));
    for (const auto& token : t) values.push_back(parse_number<double>(token, "marginal"));
    ++rows;
  }
  MarginalSet out(rows, cols);
  std::copy(values.begin(), values.end(), out.data().begin());
  return out;
}

void write_report(std::ostream& out, const EngineReport& report) {
  out << "converged=" << (report.converged ? "true" : "false") << '\n'
      << "iterations=" << report.iterations << '\n'
      << "final_delta=" << format_real(report.final_delta) << '\n'
      << "free_energy=" << format_real(report.free_energy) << '\n'
      << "wall_time=" << format_real(report.wall_time) << '\n';
}

void write_score(std::ostream& out, const ScoreReport& report) {
  out << "overlap=" << format_real(report.overlap) << '\n'
      << "confidence=" << format_real(report.confidence) << '\n'
      << "chance=" << format_real(report.chance) << '\n'
      << "illusive_gap=" << format_real(report.illusive_gap()) << '\n'
      << "best_permutation=";
  for (std::size_t b = 0; b < report.best_permutation.size(); ++b) {
    out << (b ? "," : "") << report.best_permutation[b];
  }
  out << '\n';
}

void write_confusion(std::ostream& out, const std::vector<std::vector<std::size_t>>& counts) {
  for (const auto& row : counts) {
    for (std::size_t s = 0; s < row.size(); ++s) out << (s ? " " : "") << row[s];
    out << '\n';
  }
}

void write_embedding(std::ostream& out, const Embedding& embedding) {
  out << embedding.dim() << " eigenvalues:";
  for (double v : embedding.eigenvalues) out << ' ' << format_real(v);
  out << '\n';
  write_marginals(out, embedding.coords);
}

void write_em_result(std::ostream& out, const EmResult& result, EmEngine engine) {
  write_model(out, result.model);
  out << "trace\n";
  for (double f : result.free_energy_trace) out << format_real(f) << '\n';
  const auto& chosen = result.restarts.at(result.selected);
  out << "engine=" << to_string(engine) << '\n'
      << "selected_restart=" << result.selected << '\n'
      << "restarts=" << result.restarts.size() << '\n'
      << "rounds=" << chosen.rounds << '\n'
      << "converged=" << (chosen.converged ? "true" : "false") << '\n'
      << "free_energy=" << format_real(chosen.free_energy) << '\n'
      << "log_likelihood_per_node=" << format_real(chosen.log_likelihood) << '\n';
}

Graph load_graph(const std::filesystem::path& path) {
  return load(path, [](std::istream& in) { return read_graph(in); });
}

LabelAssignment load_labels(const std::filesystem::path& path, std::optional<std::size_t> q) {
  return load(path, [q](std::istream& in) { return read_labels(in, q); });
}

BlockModel load_model(const std::filesystem::path& path) {
  return load(path, [](std::istream& in) { return read_model(in); });
}

MarginalSet load_marginals(const std::filesystem::path& path) {
  return load(path, [](std::istream& in) { return read_marginals(in); });
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

InitMode parse_init_mode(const std::string& text) {
  if (text == "random") return InitMode::kRandom;
  if (text == "uniform") return InitMode::kUniform;
  if (text == "from_labels" || text == "labels") return InitMode::kFromLabels;
  throw InvalidArgument("unknown init mode '" + text + "' (expected random, uniform or from_labels)");
}

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::kRandom: return "random";
    case InitMode::kUniform: return "uniform";
    case InitMode::kFromLabels: return "from_labels";
  }
  return "unknown";
}

}  // namespace sbm
