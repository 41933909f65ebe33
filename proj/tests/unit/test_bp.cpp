#include <gtest/gtest.h>

#include <cmath>

#include "sbm/bp.hpp"
#include "sbm/error.hpp"
#include "sbm/metrics.hpp"
#include "test_util.hpp"

namespace sbm {
namespace {

using testing::make_graph;
using testing::max_abs_diff;
using testing::path_graph;
using testing::two_class_model;

Graph random_tree(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Graph::Edge> edges;
  for (NodeId i = 1; i < n; ++i) edges.emplace_back(static_cast<NodeId>(rng.below(i)), i);
  return Graph::from_edges(n, edges);
}

double row_sum_error(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

TEST(BpInit, Modes) {
  const auto g = path_graph(5);
  const auto model = modular_model(4, 3.0, 0.3, 5.0);
  const auto uniform = init_messages(g, model, InitMode::kUniform, 0);
  for (double v : uniform.values.data()) EXPECT_EQ(v, 0.25);

  const LabelAssignment labels{{0, 1, 1, 0, 1}, 2};
  const auto m2 = two_class_model(0.5, 3.0, 1.0, 5.0);
  const auto from = init_messages(g, m2, InitMode::kFromLabels, 0, &labels);
  // slot 0 belongs to node 0, whose label is 0
  EXPECT_DOUBLE_EQ(from.values(0, 0), 0.999);
  EXPECT_DOUBLE_EQ(from.values(0, 1), 1e-3);
  const auto slot = g.first_slot(1);
  EXPECT_DOUBLE_EQ(from.values(slot, 0), 1e-3);
  EXPECT_DOUBLE_EQ(from.values(slot, 1), 0.999);

  const auto a = init_messages(g, model, InitMode::kRandom, 42);
  const auto b = init_messages(g, model, InitMode::kRandom, 42);
  EXPECT_EQ(a.values, b.values);
  EXPECT_LT(row_sum_error(a.values), 1e-12);
  EXPECT_THROW(init_messages(g, m2, InitMode::kFromLabels, 0), InvalidArgument);
}

TEST(BpSweep, NormalizationAfterEverySweep) {
  const auto model = modular_model(4, 16.0, 0.35, 2000.0);
  const auto inst = generate(model, 2000, 5);
  auto state = make_bp_state(inst.graph, model,
                             init_messages(inst.graph, model, InitMode::kRandom, 9));
  Rng rng(3);
  for (int it = 0; it < 20; ++it) {
    bp_sweep(state, inst.graph, model, 0.0, rng);
    ASSERT_LT(row_sum_error(state.messages.values), 1e-12);
    ASSERT_LT(row_sum_error(state.marginals), 1e-12);
  }
}

TEST(BpSweep, IncrementalFieldTracksRecomputation) {
  const auto model = modular_model(4, 8.0, 0.4, 1000.0);
  const auto inst = generate(model, 1000, 8);
  auto state = make_bp_state(inst.graph, model,
                             init_messages(inst.graph, model, InitMode::kRandom, 1));
  Rng rng(2);
  for (int it = 0; it < 1000; ++it) {
    bp_sweep(state, inst.graph, model, 0.0, rng);
    if (it % 97 == 0 || it == 999) {
      const ExternalField fresh(state.marginals, model);
      for (std::size_t r = 0; r < 4; ++r) ASSERT_NEAR(state.field[r], fresh[r], 1e-10);
    }
  }
}

TEST(BpSweep, UniformAffinityIsFixedPoint) {
  const auto model = uniform_model({0.2, 0.3, 0.5}, 4.0, 500.0);
  const auto inst = generate(model, 500, 4);
  MessageSet start{Matrix(inst.graph.n_slots(), 3)};
  for (std::size_t e = 0; e < inst.graph.n_slots(); ++e) {
    for (std::size_t r = 0; r < 3; ++r) start.values(e, r) = model.priors[r];
  }
  auto state = make_bp_state(inst.graph, model, start);
  Rng rng(1);
  EXPECT_LT(bp_sweep(state, inst.graph, model, 0.0, rng), 1e-15);

  EstepOptions options;
  options.init = InitMode::kUniform;
  const auto result = run_bp(inst.graph, model, options);
  EXPECT_TRUE(result.report.converged);
  EXPECT_LE(result.report.iterations, 2u);
  for (std::size_t i = 0; i < inst.graph.n_nodes(); ++i) {
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(result.marginals(i, r), model.priors[r], 1e-12);
  }
}

TEST(BpSweep, LeafMessageWithUnequalPriors) {
  const auto g = make_graph(2, {{0, 1}});
  const auto model = two_class_model(0.7, 1.5, 0.1, 2.0);
  auto state = make_bp_state(g, model, init_messages(g, model, InitMode::kUniform, 0));
  Rng rng(1);
  for (int it = 0; it < 200; ++it) bp_sweep(state, g, model, 0.0, rng);
  const auto& psi = state.marginals;
  std::vector<double> theta(2, 0.0);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t s = 0; s < 2; ++s) theta[r] += model.affinity(r, s) * (psi(0, s) + psi(1, s)) / 2;
  }
  const double w0 = 0.7 * std::exp(-theta[0]);
  const double w1 = 0.3 * std::exp(-theta[1]);
  EXPECT_NEAR(state.messages.values(0, 0), w0 / (w0 + w1), 1e-10);
}

TEST(BpSweep, DampingOutOfRange) {
  const auto g = path_graph(3);
  const auto model = two_class_model(0.5, 2.0, 1.0, 3.0);
  auto state = make_bp_state(g, model, init_messages(g, model, InitMode::kUniform, 0));
  Rng rng(1);
  EXPECT_THROW(bp_sweep(state, g, model, 1.0, rng), InvalidArgument);
  EXPECT_THROW(bp_sweep(state, g, model, -0.1, rng), InvalidArgument);
  EXPECT_NO_THROW(bp_sweep(state, g, model, 0.5, rng));
}

TEST(RunBp, TreeMarginalsMatchEnumeration) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const std::size_t n = 6 + k % 5;
    const auto g = random_tree(n, 100 + k);
    auto model = two_class_model(0.65, 10.0, 0.01, 1e4);
    EstepOptions options;
    options.seed = k;
    options.tol = 1e-13;
    options.max_iters = 5000;
    const auto bp = run_bp(g, model, options);
    ASSERT_TRUE(bp.report.converged);
    const auto exact = exact_marginals(g, model);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(std::abs(bp.marginals(i, 0) - exact(i, 0)), 0.05) << "instance " << k;
    }
  }
}

TEST(RunBp, TreeExactnessImprovesWithScale) {
  // The field replaces log(1 - c/N) by -c/N, an O(1/N) error per non-edge.
  const auto g = random_tree(9, 7);
  double previous = 1.0;
  for (double scale : {1e2, 1e3, 1e4, 1e5}) {
    const auto model = two_class_model(0.6, 5.0, 0.25, scale);
    EstepOptions options;
    options.tol = 1e-14;
    options.max_iters = 10000;
    const auto bp = run_bp(g, model, options);
    const double err = max_abs_diff(bp.marginals, exact_marginals(g, model));
    EXPECT_LT(err, previous);
    previous = err;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Bethe, ThreeNodePathSingleClassGolden) {
  // q=1: every message is 1, Z = c, theta = c, giant term c N/2.
  // F = (2 log c - (4 log c - 3c) - 3c/2) / 3 = -(2/3) log c + c/2.
  const auto g = path_graph(3);
  for (double c : {0.5, 4.0 / 3.0, 2.0, 2.9}) {
    BlockModel model{{1.0}, Matrix(1, 1, c), 3.0};
    const auto result = run_bp(g, model, {});
    const double golden = -(2.0 / 3.0) * std::log(c) + c / 2.0;
    EXPECT_NEAR(result.report.free_energy, golden, 1e-12) << "c=" << c;
  }
}

TEST(Bethe, LowerIsBetterAtSingleClass) {
  // F(c) = -(M/N) log c + c/2 is minimised at the plug-in c = 2M/N.
  const auto g = generate(uniform_model({1.0}, 3.0, 5000.0), 5000, 12).graph;
  const double chat = 2.0 * static_cast<double>(g.n_edges()) / 5000.0;
  auto f = [&](double c) {
    BlockModel model{{1.0}, Matrix(1, 1, c), 5000.0};
    return run_bp(g, model, {}).report.free_energy;
  };
  EXPECT_LT(f(chat), f(chat * 0.9));
  EXPECT_LT(f(chat), f(chat * 1.1));
}

TEST(Bethe, UniformAffinitySeedIndependent) {
  const auto model = uniform_model({0.4, 0.6}, 3.0, 300.0);
  const auto g = generate(model, 300, 2).graph;
  EstepOptions a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NEAR(run_bp(g, model, a).report.free_energy, run_bp(g, model, b).report.free_energy,
              1e-10);
}

TEST(Bethe, TracksExactLogLikelihoodOnTrees) {
  // -N F - M log N approximates log P(A | theta) on a tree in the sparse limit.
  const auto g = random_tree(8, 31);
  const auto model = two_class_model(0.7, 4.0, 0.4, 1e5);
  EstepOptions options;
  options.tol = 1e-14;
  options.max_iters = 10000;
  const auto bp = run_bp(g, model, options);
  const double n = 8.0;
  const double approx = -n * bp.report.free_energy - 7.0 * std::log(1e5);
  EXPECT_NEAR(approx, exact_posterior(g, model).log_likelihood, 5e-3);
}

TEST(RunBp, PermutationEquivariance) {
  const auto model = modular_model(4, 12.0, 0.25, 3000.0);
  auto shuffled = model;
  shuffled.priors = {0.1, 0.2, 0.3, 0.4};
  const auto inst = generate(shuffled, 3000, 77);
  Rng rng(5);
  const auto perm = testing::random_perm(4, rng);
  std::vector<std::uint32_t> inverse(4);
  for (std::uint32_t r = 0; r < 4; ++r) inverse[perm[r]] = r;
  const auto permuted = shuffled.permuted(perm);
  LabelAssignment relabeled = inst.labels;
  for (auto& t : relabeled.labels) t = inverse[t];

  EstepOptions options;
  options.init = InitMode::kFromLabels;
  options.seed = 9;
  const auto a = run_bp(inst.graph, shuffled, options, &inst.labels);
  const auto b = run_bp(inst.graph, permuted, options, &relabeled);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
  for (std::size_t i = 0; i < inst.graph.n_nodes(); ++i) {
    for (std::size_t r = 0; r < 4; ++r) ASSERT_NEAR(b.marginals(i, r), a.marginals(i, perm[r]), 1e-9);
  }
  EXPECT_NEAR(a.report.free_energy, b.report.free_energy, 1e-9);
}

TEST(RunBp, Deterministic) {
  const auto model = modular_model(3, 6.0, 0.3, 1000.0);
  const auto inst = generate(model, 1000, 4);
  EstepOptions options;
  options.seed = 11;
  const auto a = run_bp(inst.graph, model, options);
  const auto b = run_bp(inst.graph, model, options);
  EXPECT_EQ(a.marginals, b.marginals);
  EXPECT_EQ(a.messages.values, b.messages.values);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
}

TEST(RunBp, ConvergedImpliesSmallDelta) {
  const auto model = modular_model(4, 16.0, 0.2, 10000.0);
  const auto inst = generate(model, 10000, 1);
  const auto result = run_bp(inst.graph, model, {});
  ASSERT_TRUE(result.report.converged);
  EXPECT_LE(result.report.final_delta, 1e-6);
  EXPECT_LE(result.report.iterations, 1000u);
  const auto report = score(result.marginals, inst.labels, 1);
  EXPECT_GT(report.overlap, 0.6);
  EXPECT_LT(std::abs(report.confidence - report.overlap), 0.02);
}

TEST(RunBp, InfeasibleRegionAtChance) {
  const auto model = modular_model(4, 16.0, 0.6, 10000.0);
  const auto inst = generate(model, 10000, 2);
  const auto result = run_bp(inst.graph, model, {});
  EXPECT_LT(score(result.marginals, inst.labels, 1).overlap, 0.3);
}

TEST(RunBp, NonConvergenceIsReported) {
  const auto model = modular_model(4, 16.0, 0.4, 2000.0);
  const auto inst = generate(model, 2000, 3);
  EstepOptions options;
  options.max_iters = 2;
  options.tol = 0.0;
  const auto result = run_bp(inst.graph, model, options);
  EXPECT_FALSE(result.report.converged);
  EXPECT_EQ(result.report.iterations, 2u);
}

TEST(RunBp, IsolatedNodeGetsFieldTiltedPrior) {
  const auto g = make_graph(4, {{0, 1}, {1, 2}});
  const auto model = two_class_model(0.7, 2.0, 0.5, 4.0);
  EstepOptions options;
  options.tol = 1e-14;
  const auto result = run_bp(g, model, options);
  const ExternalField field(result.marginals, model);
  const double w0 = 0.7 * std::exp(-field[0]);
  const double w1 = 0.3 * std::exp(-field[1]);
  EXPECT_NEAR(result.marginals(3, 0), w0 / (w0 + w1), 1e-10);
}

TEST(DenseBp, MatchesSparseInSparseLimit) {
  const auto model = two_class_model(0.6, 4.0, 0.5, 1e5);
  const auto g = random_tree(10, 3);
  const auto dense = dense_bp_marginals(g, model, 1e-13, 5000, 1);
  EstepOptions options;
  options.tol = 1e-13;
  options.max_iters = 5000;
  const auto sparse = run_bp(g, model, options);
  EXPECT_LT(max_abs_diff(dense, sparse.marginals), 1e-3);
  EXPECT_LT(max_abs_diff(dense, exact_marginals(g, model)), 1e-3);
}

TEST(DenseBp, RejectsLargeGraphs) {
  const auto model = two_class_model(0.5, 2.0, 1.0, 2000.0);
  const auto g = path_graph(kMaxDenseBpNodes + 1);
  EXPECT_THROW(dense_bp_marginals(g, model, 1e-6, 10, 0), InvalidArgument);
}

}  // namespace
}  // namespace sbm
