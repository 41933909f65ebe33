#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sbm/error.hpp"
#include "sbm/io.hpp"
#include "sbm/netcore.hpp"
#include "test_util.hpp"

namespace sbm {
namespace {

using testing::brute_force_posterior;
using testing::make_graph;
using testing::two_class_model;

BlockModel golden_model() { return two_class_model(0.6, 5.0, 1.0, 8.0); }

TEST(Presets, FourGroupsAtTransition) {
  const auto m = modular_model(4, 16.0, 12.0 / 28.0, 1e4);
  EXPECT_NEAR(m.affinity(0, 0), 28.0, 1e-12);
  EXPECT_NEAR(m.affinity(0, 1), 12.0, 1e-12);
  EXPECT_NEAR(m.expected_degree(), 16.0, 1e-12);
  // Kesten-Stigum point: c_in - c_out = q sqrt(c)
  const auto ks = modular_model(4, 16.0, 3.0 / 7.0, 1e4);
  EXPECT_NEAR(ks.affinity(0, 0) - ks.affinity(0, 1), 16.0, 1e-12);
}

TEST(Presets, ExpandModularKeepsMeanDegree) {
  for (double eps : {0.0, 0.2, 0.7, 1.0}) {
    StructurePreset p;
    p.q = 3;
    p.mean_degree = 5.0;
    p.epsilon = eps;
    const auto m = p.expand(1000);
    m.validate();
    EXPECT_NEAR(m.expected_degree(), 5.0, 1e-12);
    EXPECT_NEAR(m.affinity(0, 2), eps * m.affinity(1, 1), 1e-12);
  }
}

TEST(Presets, CorePeripheryConventions) {
  const double eps = 0.4;
  const double c_in = 9.0 * 3.0 / (8.0 - eps);
  const auto printed = core_periphery_model(3.0, eps, 1e4, CoreIoConvention::kAbsolute);
  EXPECT_NEAR(printed.affinity(0, 0), c_in, 1e-12);
  EXPECT_NEAR(printed.affinity(1, 1), eps * c_in, 1e-12);
  EXPECT_NEAR(printed.affinity(0, 1), 1.0 - 0.5 * eps, 1e-12);

  const auto mean = core_periphery_model(3.0, eps, 1e4, CoreIoConvention::kMeanDegree);
  EXPECT_NEAR(mean.expected_degree(), 3.0, 1e-12);

  const auto equal = core_periphery_model(3.0, eps, 1e4, CoreIoConvention::kEqualDegree);
  const auto& a = equal.affinity;
  const double core = equal.priors[0] * a(0, 0) + equal.priors[1] * a(0, 1);
  const double periphery = equal.priors[0] * a(1, 0) + equal.priors[1] * a(1, 1);
  EXPECT_NEAR(core, periphery, 1e-12);
}

TEST(BlockModelTest, ValidateRejectsBadParameters) {
  auto m = two_class_model(0.5, 3.0, 1.0, 100.0);
  EXPECT_NO_THROW(m.validate());
  auto bad = m;
  bad.priors = {0.7, 0.7};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = m;
  bad.affinity(0, 1) = 2.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = m;
  bad.affinity(0, 0) = 101.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Generate, DeterministicGivenSeed) {
  const auto m = modular_model(4, 8.0, 0.3, 2000);
  const auto a = generate(m, 2000, 11);
  const auto b = generate(m, 2000, 11);
  const auto c = generate(m, 2000, 12);
  EXPECT_EQ(a.graph.edges(), b.graph.edges());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.graph.edges(), c.graph.edges());
}

TEST(Generate, ErdosRenyiMeanDegree) {
  const auto m = uniform_model({1.0}, 6.0, 50000);
  const auto inst = generate(m, 50000, 1);
  EXPECT_NEAR(inst.graph.mean_degree(), 6.0, 0.08);
}

TEST(Generate, ZeroAffinityGivesEmptyGraph) {
  const auto m = uniform_model({0.5, 0.5}, 0.0, 100);
  EXPECT_EQ(generate(m, 100, 3).graph.n_edges(), 0u);
}

TEST(Generate, RejectsProbabilityAboveOne) {
  const auto m = uniform_model({1.0}, 20.0, 20);
  EXPECT_THROW(generate(m, 10, 0), InvalidArgument);
}

TEST(Generate, BlockEdgeCountsMatchExpectation) {
  const std::size_t n = 30000;
  const auto m = modular_model(2, 10.0, 0.25, static_cast<double>(n));
  const auto inst = generate(m, n, 99);
  const auto sizes = inst.labels.class_sizes();
  double within = 0, across = 0;
  for (const auto& [i, j] : inst.graph.edges()) {
    (inst.labels.labels[i] == inst.labels.labels[j] ? within : across) += 1;
  }
  const double s0 = static_cast<double>(sizes[0]), s1 = static_cast<double>(sizes[1]);
  const double p_in = m.edge_probability(0, 0), p_out = m.edge_probability(0, 1);
  const double e_within = p_in * (s0 * (s0 - 1) / 2 + s1 * (s1 - 1) / 2);
  const double e_across = p_out * s0 * s1;
  EXPECT_NEAR(within, e_within, 5 * std::sqrt(e_within));
  EXPECT_NEAR(across, e_across, 5 * std::sqrt(e_across));
  EXPECT_NEAR(s0 / n, 0.5, 0.02);
}

TEST(Generate, DensePathMatchesProbability) {
  // p = 0.5 per pair uses the direct Bernoulli path.
  const auto m = uniform_model({1.0}, 100.0, 200);
  const auto inst = generate(m, 200, 5);
  const double pairs = 200.0 * 199.0 / 2.0;
  EXPECT_NEAR(static_cast<double>(inst.graph.n_edges()), 0.5 * pairs,
              5 * std::sqrt(0.25 * pairs));
}

TEST(EstimateComplete, HandExample) {
  const Graph g = make_graph(4, {{0, 1}, {2, 3}});
  const LabelAssignment t{{0, 0, 1, 1}, 2};
  const auto m = estimate_complete(g, t);
  EXPECT_DOUBLE_EQ(m.priors[0], 0.5);
  EXPECT_DOUBLE_EQ(m.priors[1], 0.5);
  EXPECT_DOUBLE_EQ(m.edge_probability(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.edge_probability(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(m.edge_probability(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(m.n_scale, 4.0);
}

TEST(EstimateComplete, CompleteGraphSingleClass) {
  std::vector<Graph::Edge> edges;
  for (NodeId i = 0; i < 6; ++i) {
    for (NodeId j = i + 1; j < 6; ++j) edges.emplace_back(i, j);
  }
  const auto m = estimate_complete(Graph::from_edges(6, edges), {{0, 0, 0, 0, 0, 0}, 1});
  EXPECT_DOUBLE_EQ(m.edge_probability(0, 0), 1.0);
}

TEST(EstimateComplete, CrossEdgesCountedInBothOrientations) {
  // Edge (0,3) joins class 0 -> 1 and (1,2) joins class 1 -> 0 in index order.
  const Graph g = make_graph(4, {{0, 3}, {1, 2}});
  const auto m = estimate_complete(g, {{0, 1, 0, 1}, 2});
  EXPECT_DOUBLE_EQ(m.edge_probability(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.edge_probability(1, 0), 0.5);
}

TEST(EstimateComplete, EmptyClassIsAnError) {
  const Graph g = make_graph(3, {{0, 1}});
  try {
    estimate_complete(g, {{0, 0, 0}, 2});
    FAIL() << "expected EstimationError";
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(EstimateComplete, RecoversGeneratingModelAtScale) {
  const std::size_t n = 40000;
  const auto truth = modular_model(3, 12.0, 0.2, static_cast<double>(n));
  const auto inst = generate(truth, n, 4);
  const auto est = estimate_complete(inst.graph, inst.labels);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(est.priors[r], 1.0 / 3.0, 0.01);
    for (std::size_t s = 0; s < 3; ++s) {
      EXPECT_NEAR(est.affinity(r, s), truth.affinity(r, s), 0.05 * truth.affinity(r, s) + 0.1);
    }
  }
  const auto sizes = inst.labels.class_sizes();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(est.priors[r] * static_cast<double>(n), static_cast<double>(sizes[r]), 1e-9);
  }
}

TEST(CompleteLikelihood, MatchesDirectSum) {
  const auto m = golden_model();
  const auto inst = generate(m, 8, 2024);
  double direct = 0.0;
  for (NodeId i = 0; i < 8; ++i) {
    direct += std::log(m.priors[inst.labels.labels[i]]);
    for (NodeId j = i + 1; j < 8; ++j) {
      const double p = m.edge_probability(inst.labels.labels[i], inst.labels.labels[j]);
      direct += inst.graph.has_edge(i, j) ? std::log(p) : std::log1p(-p);
    }
  }
  EXPECT_NEAR(complete_log_likelihood(inst.graph, inst.labels, m), direct, 1e-12);
}

TEST(ExactPosterior, MatchesBruteForce) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + rng.below(5);
    const auto m = two_class_model(0.3 + 0.4 * rng.uniform(), 2.0 + rng.uniform(),
                                   0.5 * rng.uniform(), static_cast<double>(n));
    const auto inst = generate(m, n, rng());
    const auto exact = exact_posterior(inst.graph, m);
    const auto brute = brute_force_posterior(inst.graph, m);
    EXPECT_LT(testing::max_abs_diff(exact.marginals, brute.marginals), 1e-12);
    EXPECT_NEAR(exact.log_likelihood, brute.log_likelihood, 1e-10);
  }
}

TEST(ExactPosterior, UniformAffinityGivesPriors) {
  const auto m = uniform_model({0.2, 0.5, 0.3}, 1.5, 6);
  const auto inst = generate(m, 6, 8);
  const auto marg = exact_marginals(inst.graph, m);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(marg(i, r), m.priors[r], 1e-12);
  }
}

TEST(ExactPosterior, SingleNodeGivesPriors) {
  const auto m = uniform_model({0.25, 0.75}, 0.5, 1);
  const auto marg = exact_marginals(Graph::from_edges(1, {}), m);
  EXPECT_NEAR(marg(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(marg(0, 1), 0.75, 1e-15);
}

TEST(ExactPosterior, RefusesLargeInstances) {
  const auto m = uniform_model({0.5, 0.5}, 1.0, 30);
  EXPECT_THROW(exact_posterior(Graph::from_edges(30, {}), m), InstanceTooLarge);
}

TEST(ExactPosterior, GoldenEightNodeInstance) {
  const auto m = golden_model();
  const auto inst = generate(m, 8, 2024);
  const auto exact = exact_posterior(inst.graph, m);

  std::ifstream in(std::string(SBM_TEST_DATA_DIR) + "/exact_n8_q2.txt");
  ASSERT_TRUE(in) << "missing golden file";
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, std::to_string(inst.graph.n_nodes()) + " " + std::to_string(inst.graph.n_edges()));
  for (std::size_t i = 0; i < 8; ++i) {
    double a = 0, b = 0;
    in >> a >> b;
    EXPECT_NEAR(exact.marginals(i, 0), a, 1e-12) << i;
    EXPECT_NEAR(exact.marginals(i, 1), b, 1e-12) << i;
  }
  std::string key;
  double ll = 0;
  in >> key >> ll;
  EXPECT_EQ(key, "log_likelihood");
  EXPECT_NEAR(exact.log_likelihood, ll, 1e-10);
}

}  // namespace
}  // namespace sbm
