#include <gtest/gtest.h>

#include <cmath>

#include "sbm/em.hpp"
#include "sbm/error.hpp"
#include "sbm/metrics.hpp"
#include "test_util.hpp"

namespace sbm {
namespace {

using testing::two_class_model;

double max_relative_change(const BlockModel& a, const BlockModel& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.affinity.data().size(); ++k) {
    worst = std::max(worst, std::abs(a.affinity.data()[k] - b.affinity.data()[k]) /
                                b.affinity.data()[k]);
  }
  return worst;
}

TEST(MStepBp, SingleClassGivesMeanDegree) {
  const auto model = uniform_model({1.0}, 4.0, 1000.0);
  const auto g = generate(model, 1000, 3).graph;
  const auto bp = run_bp(g, model, {});
  const auto next = m_step_bp(bp.messages, bp.marginals, g, model);
  EXPECT_NEAR(next.affinity(0, 0), 2.0 * static_cast<double>(g.n_edges()) / 1000.0, 1e-12);
  EXPECT_DOUBLE_EQ(next.priors[0], 1.0);
}

TEST(MStepBp, UniformMessagesKeepUniformAffinity) {
  const auto model = uniform_model({0.5, 0.5}, 3.0, 2000.0);
  const auto g = generate(model, 2000, 4).graph;
  auto state = make_bp_state(g, model, init_messages(g, model, InitMode::kUniform, 0));
  auto next = m_step_bp(state.messages, state.marginals, g, model);
  EXPECT_NEAR(next.affinity(0, 1), next.affinity(0, 0), 1e-12);
  EXPECT_NEAR(next.affinity(1, 1), next.affinity(0, 0), 1e-12);
  // the level itself is the observed mean degree
  EXPECT_NEAR(next.affinity(0, 0), g.mean_degree(), 1e-12);
}

TEST(MStepBp, HardMessagesRecoverGeneratingModel) {
  const auto model = modular_model(4, 16.0, 0.2, 10000.0);
  const auto inst = generate(model, 10000, 5);
  auto state = make_bp_state(
      inst.graph, model, init_messages(inst.graph, model, InitMode::kFromLabels, 0, &inst.labels));
  const auto next = m_step_bp(state.messages, state.marginals, inst.graph, model);
  EXPECT_LT(max_relative_change(next, model), 0.05);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(next.priors[r], 0.25, 0.02);
  EXPECT_NO_THROW(next.validate());
}

TEST(MStepBp, EmptyClassRejected) {
  const auto g = testing::path_graph(4);
  const auto model = two_class_model(0.5, 2.0, 1.0, 4.0);
  MessageSet messages{Matrix(g.n_slots(), 2)};
  MarginalSet marginals(4, 2);
  for (std::size_t e = 0; e < g.n_slots(); ++e) messages.values(e, 0) = 1.0;
  for (std::size_t i = 0; i < 4; ++i) marginals(i, 0) = 1.0;
  EXPECT_THROW(m_step_bp(messages, marginals, g, model), EstimationError);
}

TEST(MStepMf, HardBeliefsEqualCompleteEstimate) {
  const auto model = modular_model(3, 10.0, 0.3, 10000.0);
  const auto inst = generate(model, 10000, 6);
  MarginalSet hard(10000, 3);
  for (std::size_t i = 0; i < 10000; ++i) hard(i, inst.labels.labels[i]) = 1.0;
  const auto a = m_step_mf(hard, inst.graph);
  const auto b = estimate_complete(inst.graph, inst.labels);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(a.priors[r], b.priors[r], 1e-12);
    for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(a.affinity(r, s), b.affinity(r, s), 1e-9);
  }
}

TEST(MStepMf, UniformBeliefsGiveDensity) {
  const auto model = modular_model(2, 5.0, 0.2, 3000.0);
  const auto g = generate(model, 3000, 7).graph;
  const auto next = m_step_mf(MarginalSet(3000, 2, 0.5), g);
  const double p0 = 2.0 * static_cast<double>(g.n_edges()) / (3000.0 * 2999.0);
  for (double c : next.affinity.data()) EXPECT_NEAR(c / 3000.0, p0, 1e-15);

  const auto single = m_step_mf(MarginalSet(3000, 1, 1.0), g);
  EXPECT_NEAR(single.affinity(0, 0) / 3000.0, p0, 1e-15);
}

TEST(MStepMf, VanishedPairRejected) {
  const auto g = testing::path_graph(3);
  MarginalSet one_each(3, 3);
  one_each(0, 0) = one_each(1, 1) = one_each(2, 2) = 1.0;
  EXPECT_THROW(m_step_mf(one_each, g), EstimationError);
}

TEST(RandomAffinity, MatchesMeanDegree) {
  const auto g = generate(modular_model(4, 8.0, 0.3, 5000.0), 5000, 8).graph;
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_affinity_model(g, 4, rng);
    EXPECT_NO_THROW(m.validate());
    EXPECT_NEAR(m.expected_degree(), g.mean_degree(), 1e-9);
    for (double p : m.priors) EXPECT_DOUBLE_EQ(p, 0.25);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t s = 0; s < 4; ++s) {
        if (r != s) EXPECT_GE(m.affinity(r, r), m.affinity(r, s));
      }
    }
  }
}

TEST(SpectralInit, SeparableCliques) {
  std::vector<Graph::Edge> edges;
  for (NodeId b = 0; b < 2; ++b) {
    for (NodeId i = 0; i < 8; ++i) {
      for (NodeId j = i + 1; j < 8; ++j) edges.emplace_back(8 * b + i, 8 * b + j);
    }
  }
  edges.emplace_back(0, 8);
  const auto g = Graph::from_edges(16, edges);
  const auto m = spectral_init(g, 2, SpectralMethod::kModularity);
  EXPECT_NEAR(m.affinity(0, 0) / 16.0, 1.0, 1e-12);
  EXPECT_NEAR(m.affinity(1, 1) / 16.0, 1.0, 1e-12);
  EXPECT_NEAR(m.affinity(0, 1) / 16.0, 1.0 / 64.0, 1e-12);
}

TEST(RunEm, StableAtTruth) {
  const auto model = modular_model(4, 16.0, 0.2, 10000.0);
  const auto inst = generate(model, 10000, 9);
  EmConfig config;
  config.init = EmInit::kGiven;
  config.given = model;
  const auto em = run_em(inst.graph, 4, config, 3);
  EXPECT_LT(max_relative_change(em.model, model), 0.05);
  const auto fixed = run_bp(inst.graph, model, {});
  EXPECT_NEAR(score(em.marginals, inst.labels, 1).overlap,
              score(fixed.marginals, inst.labels, 1).overlap, 0.02);
  EXPECT_EQ(em.free_energy_trace.size(), em.restarts[0].rounds + 1);
}

TEST(RunEm, MeanFieldTraceNonDecreasing) {
  const auto model = modular_model(3, 8.0, 0.25, 3000.0);
  const auto inst = generate(model, 3000, 10);
  EmConfig config;
  config.engine = EmEngine::kMf;
  config.mf_mass = MfNonEdgeMass::kCavity;
  config.max_rounds = 15;
  config.estep.tol = 1e-9;
  const auto em = run_em(inst.graph, 3, config, 4);
  ASSERT_GE(em.free_energy_trace.size(), 2u);
  for (std::size_t k = 1; k < em.free_energy_trace.size(); ++k) {
    EXPECT_GE(em.free_energy_trace[k], em.free_energy_trace[k - 1] - 1e-9) << "round " << k;
  }
}

TEST(RunEm, RandomRestartsSelectBestLikelihood) {
  const auto model = modular_model(4, 16.0, 0.2, 3000.0);
  const auto inst = generate(model, 3000, 11);
  EmConfig config;
  config.restarts = 4;
  config.threads = 2;
  const auto em = run_em(inst.graph, 4, config, 5);
  ASSERT_EQ(em.restarts.size(), 4u);
  const auto& chosen = em.restarts[em.selected];
  bool any_converged = false;
  for (const auto& s : em.restarts) any_converged = any_converged || s.converged;
  for (const auto& s : em.restarts) {
    if (s.ok && (s.converged || !any_converged)) EXPECT_LE(s.log_likelihood, chosen.log_likelihood);
  }
  EXPECT_NEAR(chosen.log_likelihood, -chosen.free_energy, 0.0);
  EXPECT_GT(score(em.marginals, inst.labels, 1).overlap, 0.8);
}

TEST(RunEm, ReproducibleAcrossThreadCounts) {
  const auto model = modular_model(2, 6.0, 0.3, 2000.0);
  const auto inst = generate(model, 2000, 12);
  EmConfig config;
  config.restarts = 3;
  config.max_rounds = 10;
  config.threads = 1;
  const auto a = run_em(inst.graph, 2, config, 8);
  config.threads = 3;
  const auto b = run_em(inst.graph, 2, config, 8);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.marginals, b.marginals);
  EXPECT_EQ(a.free_energy_trace, b.free_energy_trace);
}

TEST(RunEm, PermutationEquivariance) {
  auto model = modular_model(3, 10.0, 0.3, 3000.0);
  model.priors = {0.2, 0.3, 0.5};
  const auto inst = generate(model, 3000, 13);
  Rng rng(4);
  const auto perm = testing::random_perm(3, rng);
  std::vector<std::uint32_t> inverse(3);
  for (std::uint32_t r = 0; r < 3; ++r) inverse[perm[r]] = r;
  LabelAssignment relabeled = inst.labels;
  for (auto& t : relabeled.labels) t = inverse[t];

  for (auto engine : {EmEngine::kBp, EmEngine::kMf}) {
    EmConfig config;
    config.engine = engine;
    config.init = EmInit::kGiven;
    config.max_rounds = 8;
    config.estep.init = InitMode::kFromLabels;
    config.given = model;
    config.init_labels = inst.labels;
    const auto a = run_em(inst.graph, 3, config, 2);
    config.given = model.permuted(perm);
    config.init_labels = relabeled;
    const auto b = run_em(inst.graph, 3, config, 2);
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_NEAR(b.model.priors[r], a.model.priors[perm[r]], 1e-9);
      for (std::size_t s = 0; s < 3; ++s) {
        EXPECT_NEAR(b.model.affinity(r, s), a.model.affinity(perm[r], perm[s]), 1e-7);
      }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < 3000; ++i) {
      for (std::size_t r = 0; r < 3; ++r) {
        worst = std::max(worst, std::abs(b.marginals(i, r) - a.marginals(i, perm[r])));
      }
    }
    EXPECT_LT(worst, 1e-8) << to_string(engine);
  }
}

TEST(RunEm, AllRestartsFailing) {
  const auto g = generate(modular_model(2, 4.0, 0.3, 500.0), 500, 2).graph;
  EmConfig config;
  config.init = EmInit::kGiven;
  config.given = two_class_model(1.0, 4.0, 1.0, 500.0);
  config.restarts = 2;
  EXPECT_THROW(run_em(g, 2, config, 1), NumericalFailure);
}

TEST(RunEm, ConfigValidation) {
  const auto g = testing::path_graph(5);
  EmConfig config;
  config.max_rounds = 0;
  EXPECT_THROW(run_em(g, 2, config, 0), InvalidArgument);
  config = {};
  config.init = EmInit::kGiven;
  EXPECT_THROW(run_em(g, 2, config, 0), InvalidArgument);
  config = {};
  config.estep.init = InitMode::kFromLabels;
  EXPECT_THROW(run_em(g, 2, config, 0), InvalidArgument);
  EXPECT_THROW(run_em(g, 0, EmConfig{}, 0), InvalidArgument);
}

TEST(RunEm, Names) {
  EXPECT_EQ(parse_em_engine("mf"), EmEngine::kMf);
  EXPECT_EQ(parse_em_init(to_string(EmInit::kSpectral)), EmInit::kSpectral);
  EXPECT_THROW(parse_em_engine("gibbs"), InvalidArgument);
  EXPECT_THROW(parse_em_init("kmeans"), InvalidArgument);
}

TEST(LogLikelihoodEstimate, Signs) {
  EXPECT_DOUBLE_EQ(log_likelihood_estimate(EmEngine::kBp, 1.5, 10), -1.5);
  EXPECT_DOUBLE_EQ(log_likelihood_estimate(EmEngine::kMf, -20.0, 10), -2.0);
}

}  // namespace
}  // namespace sbm
