#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbm/block_model.hpp"
#include "sbm/em.hpp"
#include "sbm/embedding.hpp"
#include "sbm/estep.hpp"
#include "sbm/mf.hpp"

namespace sbm {

enum class SweepAxis { kEpsilon, kMeanDegree };

enum class SweepEngine {
  kBp,
  kMf,
  kSpectralModularity,
  kSpectralDiffusion,
  kEmBp,
  kEmMf,
};

struct ExperimentSpec {
  StructurePreset preset;
  std::size_t n = 10000;
  SweepAxis axis = SweepAxis::kEpsilon;
  /// Inclusive range start, start + step, ..., up to stop.
  double start = 0.1;
  double stop = 0.9;
  double step = 0.05;
  std::vector<SweepEngine> engines{SweepEngine::kBp, SweepEngine::kMf};
  std::size_t replicates = 5;
  std::uint64_t seed = 0;
  /// BP and MF knobs; the seed field is replaced per row.
  EstepOptions estep{};
  MfNonEdgeMass mf_mass = MfNonEdgeMass::kBeliefMass;
  SpectralOptions spectral{};
  /// EM knobs for the em_* engines; engine and seed are set per row.
  EmConfig em{};
  /// Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 1;

  std::vector<double> axis_values() const;
  void validate() const;
};

struct SweepRow {
  double axis_value = 0.0;
  SweepEngine engine = SweepEngine::kBp;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double overlap = 0.0;
  /// NaN for engines that output hard labels only.
  double confidence = 0.0;
  /// NaN for spectral engines.
  double free_energy = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  /// Error message of a failed row, empty otherwise.
  std::string note;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kEpsilon;
  /// Ordered by axis value, then engine in spec order, then replicate.
  std::vector<SweepRow> rows;
};

/// Seed of the instance at one axis point and replicate. It depends on the
/// axis value itself, not on its position, so editing the grid leaves the
/// remaining rows unchanged.
std::uint64_t row_seed(std::uint64_t base, double axis_value, std::size_t replicate);

/// Instances are generated from the preset at each point; bp and mf receive
/// the generating model, em_* learn it. Row failures are recorded in the row.
SweepResult run_sweep(const ExperimentSpec& spec);

/// Header line plus one tab-separated row per entry, reals with 6 significant digits.
void emit_tsv(std::ostream& out, const SweepResult& result, bool include_wall_time = true);
/// Per point and engine: mean ± standard error over replicates.
void emit_summary(std::ostream& out, const SweepResult& result);

SweepAxis parse_sweep_axis(const std::string& text);
std::string to_string(SweepAxis axis);
SweepEngine parse_sweep_engine(const std::string& text);
std::string to_string(SweepEngine engine);

/// %.6g formatting; "nan" for NaN.
std::string format_6g(double value);

}  // namespace sbm
