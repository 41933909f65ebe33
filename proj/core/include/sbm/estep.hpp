#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace sbm {

enum class InitMode {
  /// Each message (or belief) drawn from a symmetric Dirichlet(1).
  kRandom,
  /// Every entry 1/q.
  kUniform,
  /// 1 - (q-1) 1e-3 on the given label, 1e-3 elsewhere.
  kFromLabels,
};

/// Knobs shared by the BP and MF E-steps so their timings compare directly.
struct EstepOptions {
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  double damping = 0.0;
  InitMode init = InitMode::kRandom;
  std::uint64_t seed = 0;
};

/// Outcome of one E-step run.
struct EngineReport {
  bool converged = false;
  std::size_t iterations = 0;
  /// Largest entry change of the last sweep.
  double final_delta = 0.0;
  /// Bethe value for BP, naive mean-field value for MF.
  double free_energy = 0.0;
  double wall_time = 0.0;
};

InitMode parse_init_mode(const std::string& text);
std::string to_string(InitMode mode);

}  // namespace sbm
