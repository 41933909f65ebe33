#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sbm/bp.hpp"
#include "sbm/em.hpp"
#include "sbm/embedding.hpp"
#include "sbm/error.hpp"
#include "sbm/experiment.hpp"
#include "sbm/io.hpp"
#include "sbm/metrics.hpp"
#include "sbm/mf.hpp"
#include "sbm/netcore.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

struct ModelFlags {
  std::string preset = "four-groups";
  std::optional<std::size_t> q;
  std::optional<double> c;
  double epsilon = 0.2;
  std::string core_io = "absolute";
  std::string model_file;

  void add(CLI::App& app) {
    app.add_option("--preset", preset, "Benchmark structure")
        ->check(CLI::IsMember({"four-groups", "two-groups", "core-periphery"}));
    app.add_option("--q", q, "Number of classes of a modular preset");
    app.add_option("--c", c, "Mean degree (default 16 for four-groups, 3 otherwise)");
    app.add_option("--epsilon", epsilon, "Contrast c_out / c_in");
    app.add_option("--core-io", core_io, "Core-periphery cross affinity convention")
        ->check(CLI::IsMember({"mean-degree", "equal-degree", "absolute"}));
    app.add_option("--model", model_file, "Model file overriding the preset");
  }

  sbm::StructurePreset preset_spec() const {
    sbm::StructurePreset p;
    if (!model_file.empty()) {
      p.kind = sbm::PresetKind::kCustom;
      p.custom = sbm::load_model(model_file);
      return p;
    }
    if (preset == "core-periphery") {
      p.kind = sbm::PresetKind::kCorePeriphery;
      p.q = 2;
      p.mean_degree = c.value_or(3.0);
      p.core_io = core_io == "equal-degree" ? sbm::CoreIoConvention::kEqualDegree
                  : core_io == "absolute"   ? sbm::CoreIoConvention::kAbsolute
                                            : sbm::CoreIoConvention::kMeanDegree;
    } else {
      p.kind = sbm::PresetKind::kModular;
      const bool four = preset == "four-groups";
      p.q = q.value_or(four ? 4 : 2);
      p.mean_degree = c.value_or(four ? 16.0 : 3.0);
    }
    p.epsilon = epsilon;
    return p;
  }
};

struct EstepFlags {
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  double damping = 0.0;
  std::string init = "random";

  void add(CLI::App& app) {
    app.add_option("--tol", tol, "Largest message change at convergence");
    app.add_option("--max-iters", max_iters, "Sweep cap");
    app.add_option("--damping", damping, "Damping weight on the old value, in [0, 1)");
    app.add_option("--init", init, "Message initialization")
        ->check(CLI::IsMember({"random", "uniform", "from_labels"}));
  }

  sbm::EstepOptions options(std::uint64_t seed) const {
    return {tol, max_iters, damping, sbm::parse_init_mode(init), seed};
  }
};

sbm::MfNonEdgeMass parse_mass(const std::string& text) {
  if (text == "prior") return sbm::MfNonEdgeMass::kPrior;
  if (text == "cavity") return sbm::MfNonEdgeMass::kCavity;
  return sbm::MfNonEdgeMass::kBeliefMass;
}

std::size_t default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <class F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  auto out = sbm::open_output(path);
  write(out);
  if (!out) throw sbm::IoError("failed writing '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic block model inference: generation, BP/MF E-steps, EM, spectral clustering, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
  std::string out_path;
  app.add_option("--seed", seed, "Base random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->envname("SBM_THREADS");
  app.add_option("--out", out_path, "Output path ('-' for stdout)");

  // generate
  auto* gen = app.add_subcommand("generate", "Draw a graph and its labels from a preset or model file");
  ModelFlags gen_model;
  std::size_t gen_n = 10000;
  gen_model.add(*gen);
  gen->add_option("--N", gen_n, "Number of nodes");
  gen->add_option("--out", out_path, "Output prefix: writes <prefix>.graph, .labels, .model")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "Run BP or MF at given parameters");
  std::string infer_graph, infer_model, infer_labels, infer_engine = "bp", infer_report, infer_mass = "belief";
  EstepFlags infer_flags;
  infer->add_option("--graph", infer_graph)->required();
  infer->add_option("--model", infer_model, "Parameters (model file)")->required();
  infer->add_option("--engine", infer_engine)->check(CLI::IsMember({"bp", "mf"}));
  infer->add_option("--labels", infer_labels, "True labels: prints a score report; also used by --init from_labels");
  infer->add_option("--report", infer_report, "Engine report path (key=value)");
  infer->add_option("--mf-mass", infer_mass, "Class mass in the MF non-edge field")
      ->check(CLI::IsMember({"belief", "prior", "cavity"}));
  infer->add_option("--out", out_path, "Marginals output path");
  infer_flags.add(*infer);

  // em
  auto* em = app.add_subcommand("em", "Learn parameters by expectation maximization");
  std::string em_graph, em_engine = "bp", em_init = "random_affinity", em_model, em_labels, em_marginals;
  std::string em_method = "diffusion";
  std::size_t em_q = 2, em_restarts = 1, em_rounds = 50;
  double em_param_tol = 1e-4;
  bool em_fixed_priors = false, em_cold = false;
  EstepFlags em_flags;
  em->add_option("--graph", em_graph)->required();
  em->add_option("--q", em_q, "Number of classes")->required();
  em->add_option("--engine", em_engine)->check(CLI::IsMember({"bp", "mf"}));
  em->add_option("--restarts", em_restarts, "Independent EM chains");
  em->add_option("--rounds", em_rounds, "EM round cap");
  em->add_option("--param-tol", em_param_tol, "Stop when max |delta c_rs| is below this");
  em->add_option("--start", em_init, "Parameter initialization")
      ->check(CLI::IsMember({"random_affinity", "spectral", "given"}));
  em->add_option("--spectral-method", em_method)->check(CLI::IsMember({"modularity", "diffusion"}));
  em->add_option("--model", em_model, "Starting model for --start given");
  em->add_option("--labels", em_labels, "True labels for a score report");
  em->add_flag("--fixed-priors", em_fixed_priors, "Keep the starting priors");
  em->add_flag("--cold-start", em_cold, "Re-initialize messages every round");
  em->add_option("--marginals", em_marginals, "Marginals output path");
  em->add_option("--out", out_path, "EM result output path");
  em_flags.add(*em);

  // spectral
  auto* spec = app.add_subcommand("spectral", "Spectral embedding and k-means labels");
  std::string sp_graph, sp_method = "modularity", sp_embedding, sp_labels;
  std::size_t sp_q = 2, sp_dim = 0, sp_t = 3, sp_restarts = 10;
  double sp_delta = 1e-3;
  spec->add_option("--graph", sp_graph)->required();
  spec->add_option("--q", sp_q, "Number of clusters")->required();
  spec->add_option("--method", sp_method)->check(CLI::IsMember({"modularity", "diffusion"}));
  spec->add_option("--dim", sp_dim, "Embedding dimension (0 = q-1)");
  spec->add_option("--t", sp_t, "Diffusion time");
  spec->add_option("--delta", sp_delta, "Eigenpair retention precision");
  spec->add_option("--restarts", sp_restarts, "k-means restarts");
  spec->add_option("--embedding", sp_embedding, "Embedding dump path");
  spec->add_option("--labels", sp_labels, "True labels for a score report");
  spec->add_option("--out", out_path, "Label output path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Parameter sweep with replicates");
  ModelFlags sw_model;
  EstepFlags sw_flags;
  std::size_t sw_n = 10000, sw_reps = 5, sw_restarts = 1;
  std::string sw_axis = "epsilon", sw_format = "tsv", sw_em_init = "random_affinity", sw_mass = "belief";
  double sw_from = 0.1, sw_to = 0.9, sw_step = 0.05;
  std::vector<std::string> sw_engines{"bp", "mf"};
  bool sw_no_wall = false;
  sw_model.add(*sweep);
  sw_flags.add(*sweep);
  sweep->add_option("--N", sw_n, "Number of nodes");
  sweep->add_option("--axis", sw_axis)->check(CLI::IsMember({"epsilon", "mean_degree"}));
  sweep->add_option("--from", sw_from, "First axis value");
  sweep->add_option("--to", sw_to, "Last axis value (inclusive)");
  sweep->add_option("--step", sw_step, "Axis step");
  sweep->add_option("--engine", sw_engines, "Engines to run")
      ->check(CLI::IsMember({"bp", "mf", "spectral_modularity", "spectral_diffusion", "em_bp", "em_mf"}));
  sweep->add_option("--replicates", sw_reps, "Instances per axis point");
  sweep->add_option("--restarts", sw_restarts, "EM restarts for em_* engines");
  sweep->add_option("--em-start", sw_em_init)->check(CLI::IsMember({"random_affinity", "spectral", "given"}));
  sweep->add_option("--mf-mass", sw_mass)->check(CLI::IsMember({"belief", "prior", "cavity"}));
  sweep->add_option("--format", sw_format)->check(CLI::IsMember({"tsv", "summary"}));
  sweep->add_flag("--no-wall-time", sw_no_wall, "Omit the wall time column");
  sweep->add_option("--out", out_path, "Output path");

  // score
  auto* sc = app.add_subcommand("score", "Overlap and confidence of an estimate");
  std::string sc_marginals, sc_estimate, sc_truth, sc_confusion;
  std::optional<std::size_t> sc_q;
  sc->add_option("--marginals", sc_marginals, "Marginals file");
  sc->add_option("--estimate", sc_estimate, "Hard label file");
  sc->add_option("--truth", sc_truth)->required();
  sc->add_option("--q", sc_q, "Number of classes");
  sc->add_option("--confusion", sc_confusion, "Confusion matrix output path");
  sc->add_option("--out", out_path, "Score report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      const auto model = gen_model.preset_spec().expand(static_cast<double>(gen_n));
      const auto inst = sbm::generate(model, gen_n, seed);
      with_output(out_path + ".graph", [&](std::ostream& o) { sbm::write_graph(o, inst.graph); });
      with_output(out_path + ".labels", [&](std::ostream& o) { sbm::write_labels(o, inst.labels); });
      with_output(out_path + ".model", [&](std::ostream& o) { sbm::write_model(o, model); });
      std::cerr << "N=" << inst.graph.n_nodes() << " M=" << inst.graph.n_edges() << '\n';
    } else if (*infer) {
      const auto graph = sbm::load_graph(infer_graph);
      auto model = sbm::load_model(infer_model);
      if (model.n_scale != static_cast<double>(graph.n_nodes())) {
        model = model.with_probabilities_at(static_cast<double>(graph.n_nodes()));
      }
      std::optional<sbm::LabelAssignment> truth;
      if (!infer_labels.empty()) truth = sbm::load_labels(infer_labels, model.q());
      const auto options = infer_flags.options(seed);
      const sbm::LabelAssignment* init = truth ? &*truth : nullptr;
      sbm::MarginalSet marginals;
      sbm::EngineReport report;
      if (infer_engine == "bp") {
        auto r = sbm::run_bp(graph, model, options, init);
        marginals = std::move(r.marginals);
        report = r.report;
      } else {
        auto r = sbm::run_mf(graph, model, options, init, parse_mass(infer_mass));
        marginals = std::move(r.state.beliefs);
        report = r.report;
      }
      with_output(out_path, [&](std::ostream& o) { sbm::write_marginals(o, marginals); });
      if (!infer_report.empty()) {
        with_output(infer_report, [&](std::ostream& o) { sbm::write_report(o, report); });
      } else {
        sbm::write_report(std::cerr, report);
      }
      if (truth) sbm::write_score(std::cerr, sbm::score(marginals, *truth, sbm::Rng::derive(seed, 9)));
      if (!report.converged) std::cerr << "warning: E-step did not converge\n";
    } else if (*em) {
      const auto graph = sbm::load_graph(em_graph);
      sbm::EmConfig config;
      config.engine = sbm::parse_em_engine(em_engine);
      config.estep = em_flags.options(seed);
      config.max_rounds = em_rounds;
      config.param_tol = em_param_tol;
      config.restarts = em_restarts;
      config.init = sbm::parse_em_init(em_init);
      config.spectral_method = sbm::parse_spectral_method(em_method);
      config.learn_priors = !em_fixed_priors;
      config.warm_start = !em_cold;
      config.threads = threads;
      if (!em_model.empty()) config.given = sbm::load_model(em_model);
      std::optional<sbm::LabelAssignment> truth;
      if (!em_labels.empty()) truth = sbm::load_labels(em_labels, em_q);
      if (config.estep.init == sbm::InitMode::kFromLabels) config.init_labels = truth;
      const auto result = sbm::run_em(graph, em_q, config, seed);
      with_output(out_path, [&](std::ostream& o) { sbm::write_em_result(o, result, config.engine); });
      if (!em_marginals.empty()) {
        with_output(em_marginals, [&](std::ostream& o) { sbm::write_marginals(o, result.marginals); });
      }
      if (truth) {
        sbm::write_score(std::cerr, sbm::score(result.marginals, *truth, sbm::Rng::derive(seed, 9)));
      }
    } else if (*spec) {
      const auto graph = sbm::load_graph(sp_graph);
      sbm::SpectralOptions options;
      options.dim = sp_dim;
      options.diffusion_time = sp_t;
      options.delta = sp_delta;
      options.kmeans_restarts = sp_restarts;
      options.seed = seed;
      const auto method = sbm::parse_spectral_method(sp_method);
      if (!sp_embedding.empty()) {
        const std::size_t d = sp_dim != 0 ? sp_dim : sp_q - 1;
        sbm::EigenOptions eigen;
        eigen.seed = sbm::Rng::derive(seed, 32);
        const auto emb = method == sbm::SpectralMethod::kModularity
                             ? sbm::embed_modularity(graph, d, eigen)
                             : sbm::embed_diffusion(sbm::largest_connected_component(graph).graph,
                                                    d, sp_t, sp_delta, eigen);
        with_output(sp_embedding, [&](std::ostream& o) { sbm::write_embedding(o, emb); });
      }
      const auto labels = sbm::spectral_cluster(graph, sp_q, method, options);
      with_output(out_path, [&](std::ostream& o) { sbm::write_labels(o, labels); });
      if (!sp_labels.empty()) {
        sbm::write_score(std::cerr, sbm::score(labels, sbm::load_labels(sp_labels, sp_q)));
      }
    } else if (*sweep) {
      sbm::ExperimentSpec es;
      es.preset = sw_model.preset_spec();
      es.n = sw_n;
      es.axis = sbm::parse_sweep_axis(sw_axis);
      es.start = sw_from;
      es.stop = sw_to;
      es.step = sw_step;
      es.engines.clear();
      for (const auto& e : sw_engines) es.engines.push_back(sbm::parse_sweep_engine(e));
      es.replicates = sw_reps;
      es.seed = seed;
      es.estep = sw_flags.options(seed);
      es.mf_mass = parse_mass(sw_mass);
      es.em.restarts = sw_restarts;
      es.em.init = sbm::parse_em_init(sw_em_init);
      es.threads = threads;
      const auto result = sbm::run_sweep(es);
      with_output(out_path, [&](std::ostream& o) {
        if (sw_format == "summary") {
          sbm::emit_summary(o, result);
        } else {
          sbm::emit_tsv(o, result, !sw_no_wall);
        }
      });
    } else if (*sc) {
      if (sc_marginals.empty() == sc_estimate.empty()) {
        throw sbm::InvalidArgument("score needs exactly one of --marginals or --estimate");
      }
      sbm::ScoreReport report;
      sbm::LabelAssignment estimate;
      std::optional<std::size_t> q = sc_q;
      if (!sc_marginals.empty()) {
        const auto marginals = sbm::load_marginals(sc_marginals);
        q = marginals.cols();
        const auto truth = sbm::load_labels(sc_truth, q);
        estimate = sbm::marginalize(marginals, seed);
        report = sbm::score(marginals, truth, seed);
      } else {
        auto truth = sbm::load_labels(sc_truth, q);
        estimate = sbm::load_labels(sc_estimate, truth.q);
        report = sbm::score(estimate, truth);
      }
      with_output(out_path, [&](std::ostream& o) { sbm::write_score(o, report); });
      if (!sc_confusion.empty()) {
        const auto truth = sbm::load_labels(sc_truth, estimate.q);
        with_output(sc_confusion,
                    [&](std::ostream& o) { sbm::write_confusion(o, sbm::confusion_matrix(estimate, truth)); });
      }
    }
  } catch (const sbm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const sbm::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const sbm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}
