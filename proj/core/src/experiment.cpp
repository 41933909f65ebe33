#include "sbm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "sbm/bp.hpp"
#include "sbm/error.hpp"
#include "sbm/metrics.hpp"
#include "sbm/netcore.hpp"
#include "sbm/rng.hpp"

namespace sbm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

StructurePreset preset_at(const ExperimentSpec& spec, double value) {
  StructurePreset preset = spec.preset;
  if (preset.kind == PresetKind::kCustom) return preset;
  if (spec.axis == SweepAxis::kEpsilon) {
    preset.epsilon = value;
  } else {
    preset.mean_degree = value;
  }
  return preset;
}

void run_engine(const ExperimentSpec& spec, const Instance& instance, const BlockModel& truth,
                SweepRow& row) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t engine_seed =
      Rng::derive(row.seed, 1000 + static_cast<std::uint64_t>(row.engine));
  const std::uint64_t tie_seed = Rng::derive(engine_seed, 1);
  const Graph& graph = instance.graph;
  const std::size_t q = truth.q();

  auto fill_soft = [&](const MarginalSet& marginals, const EngineReport& report) {
    const auto s = score(marginals, instance.labels, tie_seed);
    row.overlap = s.overlap;
    row.confidence = s.confidence;
    row.free_energy = report.free_energy;
    row.iterations = report.iterations;
    row.converged = report.converged;
  };

  EstepOptions estep = spec.estep;
  estep.seed = engine_seed;
  switch (row.engine) {
    case SweepEngine::kBp: {
      const auto result = run_bp(graph, truth, estep);
      fill_soft(result.marginals, result.report);
      break;
    }
    case SweepEngine::kMf: {
      const auto result = run_mf(graph, truth, estep, nullptr, spec.mf_mass);
      fill_soft(result.state.beliefs, result.report);
      break;
    }
    case SweepEngine::kSpectralModularity:
    case SweepEngine::kSpectralDiffusion: {
      SpectralOptions options = spec.spectral;
      options.seed = engine_seed;
      const auto method = row.engine == SweepEngine::kSpectralModularity
                              ? SpectralMethod::kModularity
                              : SpectralMethod::kDiffusion;
      const auto labels = spectral_cluster(graph, q, method, options);
      row.overlap = overlap(labels, instance.labels).overlap;
      row.confidence = kNaN;
      row.free_energy = kNaN;
      row.converged = true;
      break;
    }
    case SweepEngine::kEmBp:
    case SweepEngine::kEmMf: {
      EmConfig config = spec.em;
      config.engine = row.engine == SweepEngine::kEmBp ? EmEngine::kBp : EmEngine::kMf;
      config.estep.tol = spec.estep.tol;
      config.estep.max_iters = spec.estep.max_iters;
      config.estep.damping = spec.estep.damping;
      config.mf_mass = spec.mf_mass;
      if (spec.threads != 1) config.threads = 1;
      if (config.init == EmInit::kGiven && !config.given) config.given = truth;
      const auto result = run_em(graph, q, config, engine_seed);
      const auto& chosen = result.restarts[result.selected];
      const auto s = score(result.marginals, instance.labels, tie_seed);
      row.overlap = s.overlap;
      row.confidence = s.confidence;
      row.free_energy = chosen.free_energy;
      row.iterations = chosen.rounds;
      row.converged = chosen.converged;
      break;
    }
  }
  row.wall_seconds = seconds_since(start);
}

std::vector<SweepRow> run_job(const ExperimentSpec& spec, double value, std::size_t replicate) {
  const std::uint64_t seed = row_seed(spec.seed, value, replicate);
  std::vector<SweepRow> rows;
  for (SweepEngine engine : spec.engines) {
    SweepRow row;
    row.axis_value = value;
    row.engine = engine;
    row.replicate = replicate;
    row.seed = seed;
    rows.push_back(row);
  }
  try {
    const BlockModel truth = preset_at(spec, value).expand(static_cast<double>(spec.n));
    const Instance instance = generate(truth, spec.n, seed);
    for (auto& row : rows) {
      try {
        run_engine(spec, instance, truth, row);
      } catch (const std::exception& e) {
        row.overlap = row.confidence = row.free_energy = kNaN;
        row.converged = false;
        row.note = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (auto& row : rows) {
      row.overlap = row.confidence = row.free_energy = kNaN;
      row.note = e.what();
    }
  }
  return rows;
}

std::string sanitize_note(std::string note) {
  for (char& ch : note) {
    if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return note.empty() ? "-" : note;
}

}  // namespace

std::string format_6g(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

std::vector<double> ExperimentSpec::axis_values() const {
  std::vector<double> values;
  if (!(step > 0.0) || !(stop >= start)) return values;
  for (std::size_t k = 0;; ++k) {
    const double v = start + static_cast<double>(k) * step;
    if (v > stop + 1e-9 * step) break;
    values.push_back(std::round(v * 1e10) / 1e10);
  }
  return values;
}

void ExperimentSpec::validate() const {
  if (n == 0) throw InvalidArgument("sweep: N must be positive");
  if (replicates == 0) throw InvalidArgument("sweep: replicates must be at least 1");
  if (engines.empty()) throw InvalidArgument("sweep: no engines requested");
  if (!(step > 0.0)) throw InvalidArgument("sweep: step must be positive");
  const auto values = axis_values();
  if (values.empty()) throw InvalidArgument("sweep: empty axis range");
  if (preset.kind == PresetKind::kCustom && values.size() > 1) {
    throw InvalidArgument("sweep: a model file fixes the parameters; use a single axis point");
  }
}

std::uint64_t row_seed(std::uint64_t base, double axis_value, std::size_t replicate) {
  const auto key = static_cast<std::uint64_t>(std::llround(axis_value * 1e6));
  return Rng::derive(Rng::derive(base, key), replicate);
}

SweepResult run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const auto values = spec.axis_values();
  const std::size_t jobs = values.size() * spec.replicates;
  std::vector<std::vector<SweepRow>> done(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      done[job] = run_job(spec, values[job / spec.replicates], job % spec.replicates);
    }
  };
  std::size_t threads = spec.threads != 0 ? spec.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  SweepResult result{spec.axis, {}};
  result.rows.reserve(jobs * spec.engines.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    for (std::size_t e = 0; e < spec.engines.size(); ++e) {
      for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
        result.rows.push_back(done[p * spec.replicates + rep][e]);
      }
    }
  }
  return result;
}

void emit_tsv(std::ostream& out, const SweepResult& result, bool include_wall_time) {
  out << to_string(result.axis)
      << "\tengine\treplicate\tseed\toverlap\tconfidence\tfree_energy\titerations\tconverged";
  if (include_wall_time) out << "\twall_seconds";
  out << "\tnote\n";
  for (const auto& row : result.rows) {
    out << format_6g(row.axis_value) << '\t' << to_string(row.engine) << '\t' << row.replicate
        << '\t' << row.seed << '\t' << format_6g(row.overlap) << '\t'
        << format_6g(row.confidence) << '\t' << format_6g(row.free_energy) << '\t'
        << row.iterations << '\t' << (row.converged ? 1 : 0);
    if (include_wall_time) out << '\t' << format_6g(row.wall_seconds);
    out << '\t' << sanitize_note(row.note) << '\n';
  }
}

void emit_summary(std::ostream& out, const SweepResult& result) {
  struct Acc {
    std::vector<double> overlap, confidence, iterations;
    std::size_t converged = 0;
    std::size_t count = 0;
  };
  auto mean_se = [](const std::vector<double>& xs) {
    std::vector<double> v;
    for (double x : xs) {
      if (!std::isnan(x)) v.push_back(x);
    }
    if (v.empty()) return std::string("nan");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double se = 0.0;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    }
    return format_6g(mean) + " ± " + format_6g(se);
  };

  out << to_string(result.axis)
      << "\tengine\treplicates\toverlap\tconfidence\titerations\tconverged_fraction\n";
  std::size_t i = 0;
  while (i < result.rows.size()) {
    const auto& head = result.rows[i];
    Acc acc;
    for (; i < result.rows.size() && result.rows[i].axis_value == head.axis_value &&
           result.rows[i].engine == head.engine;
         ++i) {
      const auto& row = result.rows[i];
      acc.overlap.push_back(row.overlap);
      acc.confidence.push_back(row.confidence);
      acc.iterations.push_back(static_cast<double>(row.iterations));
      acc.converged += row.converged ? 1 : 0;
      ++acc.count;
    }
    out << format_6g(head.axis_value) << '\t' << to_string(head.engine) << '\t' << acc.count
        << '\t' << mean_se(acc.overlap) << '\t' << mean_se(acc.confidence) << '\t'
        << mean_se(acc.iterations) << '\t'
        << format_6g(static_cast<double>(acc.converged) / static_cast<double>(acc.count))
        << '\n';
  }
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "epsilon") return SweepAxis::kEpsilon;
  if (text == "mean_degree" || text == "c") return SweepAxis::kMeanDegree;
  throw InvalidArgument("unknown sweep axis '" + text + "' (expected epsilon or mean_degree)");
}

std::string to_string(SweepAxis axis) {
  return axis == SweepAxis::kEpsilon ? "epsilon" : "mean_degree";
}

SweepEngine parse_sweep_engine(const std::string& text) {
  if (text == "bp") return SweepEngine::kBp;
  if (text == "mf") return SweepEngine::kMf;
  if (text == "spectral_modularity") return SweepEngine::kSpectralModularity;
  if (text == "spectral_diffusion") return SweepEngine::kSpectralDiffusion;
  if (text == "em_bp") return SweepEngine::kEmBp;
  if (text == "em_mf") return SweepEngine::kEmMf;
  throw InvalidArgument("unknown engine '" + text +
                        "' (expected bp, mf, spectral_modularity, spectral_diffusion, em_bp or em_mf)");
}

std::string to_string(SweepEngine engine) {
  switch (engine) {
    case SweepEngine::kBp: return "bp";
    case SweepEngine::kMf: return "mf";
    case SweepEngine::kSpectralModularity: return "spectral_modularity";
    case SweepEngine::kSpectralDiffusion: return "spectral_diffusion";
    case SweepEngine::kEmBp: return "em_bp";
    case SweepEngine::kEmMf: return "em_mf";
  }
  return "unknown";
}

}  // namespace sbm
