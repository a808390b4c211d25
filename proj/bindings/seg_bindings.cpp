#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "seg/augment.hpp"
#include "seg/common.hpp"
#include "seg/graph.hpp"
#include "seg/harness.hpp"
#include "seg/model.hpp"
#include "seg/theory.hpp"
#include "seg/topology.hpp"

namespace py = pybind11;
using namespace seg;

namespace {

PerturbMode perturb_mode_from_string(const std::string& name) {
  if (name == "delete_inter") return PerturbMode::DeleteInter;
  if (name == "add_intra") return PerturbMode::AddIntra;
  throw ConfigError("unknown perturbation mode: " + name);
}

Matrix edges_as_array(const Graph& g) {
  Matrix out(g.num_edges(), 2);
  for (std::int64_t i = 0; i < g.num_edges(); ++i) {
    out(i, 0) = g.edges()[i].u;
    out(i, 1) = g.edges()[i].v;
  }
  return out;
}

std::vector<Edge> edges_from_pairs(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [u, v] : pairs) edges.push_back(make_edge(u, v));
  return edges;
}

}  // namespace

PYBIND11_MODULE(_seg, m) {
  m.doc() = "Self-enhanced GNN core: graphs, SGC/GCN training, topology update, "
            "training node augmentation, theory oracles and the evaluation protocol";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  // ---- graph core ----
  py::class_<Graph>(m, "Graph")
      .def(py::init([](std::int64_t num_nodes, int num_classes,
                       const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                       const Matrix& features, const std::vector<int>& labels,
                       bool allow_self_loops) {
             return Graph(num_nodes, num_classes, edges_from_pairs(edges), features, labels,
                          allow_self_loops);
           }),
           py::arg("num_nodes"), py::arg("num_classes"), py::arg("edges"), py::arg("features"),
           py::arg("labels"), py::arg("allow_self_loops") = false)
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_classes", &Graph::num_classes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("feature_dim", &Graph::feature_dim)
      .def_property_readonly("features", &Graph::features)
      .def_property_readonly("labels", &Graph::labels)
      .def_property_readonly("has_self_loops", &Graph::has_self_loops)
      .def_property_readonly("edges", &edges_as_array)
      .def("has_edge", &Graph::has_edge)
      .def("__repr__", [](const Graph& g) {
        return "Graph(n=" + std::to_string(g.num_nodes()) +
               ", c=" + std::to_string(g.num_classes()) +
               ", m=" + std::to_string(g.num_edges()) + ")";
      });

  py::class_<NoiseReport>(m, "NoiseReport")
      .def_readonly("num_edges", &NoiseReport::num_edges)
      .def_readonly("num_inter", &NoiseReport::num_inter)
      .def_readonly("num_intra", &NoiseReport::num_intra)
      .def_readonly("noise_ratio", &NoiseReport::noise_ratio)
      .def_readonly("zero_edges", &NoiseReport::zero_edges);

  m.def("load_graph", &load_graph, py::arg("path"));
  m.def("save_graph", &save_graph, py::arg("graph"), py::arg("dir"));
  m.def("noise_ratio", &noise_ratio, py::arg("graph"));
  m.def(
      "generate_planted_partition",
      [](std::int64_t n, int c, double p_intra, double p_inter, int feature_dim,
         double feature_signal, std::uint64_t seed) {
        PlantedPartitionSpec spec{n, c, p_intra, p_inter, feature_dim, feature_signal, seed};
        return generate_planted_partition(spec);
      },
      py::arg("n"), py::arg("c"), py::arg("p_intra"), py::arg("p_inter"),
      py::arg("feature_dim") = 16, py::arg("feature_signal") = 1.0, py::arg("seed") = 0);
  m.def(
      "perturb_with_ground_truth",
      [](const Graph& g, const std::string& mode, std::int64_t count, std::uint64_t seed) {
        return perturb_with_ground_truth(g, perturb_mode_from_string(mode), count, seed);
      },
      py::arg("graph"), py::arg("mode"), py::arg("count"), py::arg("seed") = 0,
      "mode: 'delete_inter' or 'add_intra'");

  // ---- splits and models ----
  py::class_<Split>(m, "Split")
      .def(py::init<>())
      .def_readwrite("train", &Split::train)
      .def_readwrite("val", &Split::val)
      .def_readwrite("test", &Split::test)
      .def("validate", &Split::validate);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](const std::string& kind, int hidden_dim, int hops, double dropout,
                       double learning_rate, double weight_decay, int epochs,
                       std::uint64_t seed) {
             ModelConfig cfg;
             cfg.kind = model_kind_from_string(kind);
             cfg.hidden_dim = hidden_dim;
             cfg.hops = hops;
             cfg.dropout = dropout;
             cfg.learning_rate = learning_rate;
             cfg.weight_decay = weight_decay;
             cfg.epochs = epochs;
             cfg.seed = seed;
             return cfg;
           }),
           py::arg("kind") = "sgc", py::arg("hidden_dim") = 16, py::arg("hops") = 2,
           py::arg("dropout") = 0.5, py::arg("learning_rate") = 0.01,
           py::arg("weight_decay") = 5e-4, py::arg("epochs") = 400, py::arg("seed") = 0)
      .def_property(
          "kind", [](const ModelConfig& c) { return to_string(c.kind); },
          [](ModelConfig& c, const std::string& k) { c.kind = model_kind_from_string(k); })
      .def_readwrite("hidden_dim", &ModelConfig::hidden_dim)
      .def_readwrite("hops", &ModelConfig::hops)
      .def_readwrite("dropout", &ModelConfig::dropout)
      .def_readwrite("learning_rate", &ModelConfig::learning_rate)
      .def_readwrite("weight_decay", &ModelConfig::weight_decay)
      .def_readwrite("epochs", &ModelConfig::epochs)
      .def_readwrite("seed", &ModelConfig::seed)
      .def("validate", &ModelConfig::validate);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("config", &TrainedModel::config)
      .def_readonly("weights", &TrainedModel::weights)
      .def_readonly("biases", &TrainedModel::biases);

  m.def("train", &train, py::arg("graph"), py::arg("split"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "train_on",
      [](const Graph& g, const std::vector<std::int32_t>& nodes, const std::vector<int>& labels,
         const ModelConfig& cfg) {
        TrainSet ts{nodes, labels};
        py::gil_scoped_release release;
        return train_on(g, ts, cfg);
      },
      py::arg("graph"), py::arg("nodes"), py::arg("labels"), py::arg("config"));
  m.def("predict", &predict, py::arg("model"), py::arg("graph"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "confidence_and_label",
      [](const Matrix& preds) {
        auto cl = confidence_and_label(preds);
        std::vector<double> conf(cl.size());
        std::vector<int> labels(cl.size());
        for (std::size_t i = 0; i < cl.size(); ++i) {
          conf[i] = cl[i].confidence;
          labels[i] = cl[i].label;
        }
        return std::make_pair(conf, labels);
      },
      py::arg("preds"), "returns (confidences, argmax labels)");
  m.def("accuracy", &accuracy, py::arg("preds"), py::arg("graph"), py::arg("nodes"));
  m.def("gradient_check", &gradient_check, py::arg("graph"), py::arg("split"), py::arg("config"),
        py::arg("epsilon") = 1e-5, py::call_guard<py::gil_scoped_release>());
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "normalized_adjacency",
      [](const Graph& g) { return Matrix(normalized_adjacency(g)); }, py::arg("graph"),
      "dense copy of the symmetric normalized adjacency");

  // ---- topology update ----
  py::class_<TUThresholds>(m, "TUThresholds")
      .def(py::init([](double tau_d, double tau_a, double max_added_ratio, double pool_ratio,
                       int topk) {
             return TUThresholds{tau_d, tau_a, max_added_ratio, pool_ratio, topk};
           }),
           py::arg("tau_d") = 0.0, py::arg("tau_a") = 1.0, py::arg("max_added_ratio") = 2.0,
           py::arg("pool_ratio") = 4.0, py::arg("topk") = 0)
      .def_readwrite("tau_d", &TUThresholds::tau_d)
      .def_readwrite("tau_a", &TUThresholds::tau_a)
      .def_readwrite("max_added_ratio", &TUThresholds::max_added_ratio)
      .def_readwrite("pool_ratio", &TUThresholds::pool_ratio)
      .def_readwrite("topk", &TUThresholds::topk)
      .def("is_rejection", &TUThresholds::is_rejection);

  py::class_<ScoredPair>(m, "ScoredPair")
      .def_readonly("u", &ScoredPair::u)
      .def_readonly("v", &ScoredPair::v)
      .def_readonly("correlation", &ScoredPair::correlation);

  py::class_<TUDecision>(m, "TUDecision")
      .def_readonly("deletions", &TUDecision::deletions)
      .def_readonly("additions", &TUDecision::additions);

  py::class_<TuneTUResult>(m, "TuneTUResult")
      .def_readonly("best", &TuneTUResult::best)
      .def_readonly("val_accuracy", &TuneTUResult::val_accuracy)
      .def_readonly("updated", &TuneTUResult::updated)
      .def_readonly("decision", &TuneTUResult::decision);

  m.def("label_correlation", &label_correlation, py::arg("preds"), py::arg("u"), py::arg("v"));
  m.def("delete_edges", &delete_edges, py::arg("graph"), py::arg("preds"), py::arg("thresholds"));
  m.def("add_edges", &add_edges, py::arg("graph"), py::arg("preds"), py::arg("thresholds"));
  m.def("modify", &modify, py::arg("graph"), py::arg("preds"), py::arg("thresholds"));
  m.def("topk_addition_candidates", &topk_addition_candidates, py::arg("preds"), py::arg("graph"),
        py::arg("topk"));
  m.def("dual_model_intersection", &dual_model_intersection, py::arg("d1"), py::arg("d2"));
  m.def(
      "tune_tu",
      [](const Graph& g, const Split& split, const ModelConfig& cfg, const std::string& mode,
         const std::vector<TUThresholds>& grid, int jobs) {
        py::gil_scoped_release release;
        return tune_tu(g, split, cfg, tu_mode_from_string(mode), grid, jobs);
      },
      py::arg("graph"), py::arg("split"), py::arg("config"), py::arg("mode"), py::arg("grid"),
      py::arg("jobs") = 1);
  m.def(
      "default_tu_grid",
      [](const std::string& mode) { return default_tu_grid(tu_mode_from_string(mode)); },
      py::arg("mode"));

  // ---- training node augmentation ----
  py::class_<AugmentedEntry>(m, "AugmentedEntry")
      .def_readonly("node", &AugmentedEntry::node)
      .def_readonly("pseudo_label", &AugmentedEntry::pseudo_label)
      .def_readonly("min_confidence", &AugmentedEntry::min_confidence);

  py::class_<AugmentedTrainSet>(m, "AugmentedTrainSet")
      .def(py::init<>())
      .def_readonly("entries", &AugmentedTrainSet::entries);

  py::class_<TuneTNAResult>(m, "TuneTNAResult")
      .def_readonly("best_tau_c", &TuneTNAResult::best_tau_c)
      .def_readonly("val_accuracy", &TuneTNAResult::val_accuracy)
      .def_readonly("augmented", &TuneTNAResult::augmented);

  m.def("swap_train_val", &swap_train_val, py::arg("split"), py::arg("num_models"),
        py::arg("seed"));
  m.def("augment", &augment, py::arg("preds"), py::arg("split"), py::arg("tau_c"));
  m.def("class_balance", &class_balance, py::arg("aug"), py::arg("num_classes"));
  m.def("tune_tna", &tune_tna, py::arg("graph"), py::arg("split"), py::arg("config"),
        py::arg("num_models"), py::arg("tau_grid"), py::arg("seed"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("default_tna_grid", &default_tna_grid);

  // ---- theory oracles ----
  py::class_<MonteCarloCheck>(m, "MonteCarloCheck")
      .def_readonly("closed_form", &MonteCarloCheck::closed_form)
      .def_readonly("monte_carlo", &MonteCarloCheck::monte_carlo)
      .def_readonly("sigma", &MonteCarloCheck::sigma)
      .def_readonly("passed", &MonteCarloCheck::pass)
      .def_readonly("alpha_before", &MonteCarloCheck::alpha_before);

  py::class_<AdditionBound>(m, "AdditionBound")
      .def_readonly("exact", &AdditionBound::exact)
      .def_readonly("approx_no_lambda", &AdditionBound::approx_no_lambda)
      .def_readonly("approx_sqrt", &AdditionBound::approx_sqrt)
      .def_readonly("discriminant_ok", &AdditionBound::discriminant_ok);

  m.def("keep_prob_intra", &keep_prob_intra, py::arg("p"), py::arg("c"));
  m.def("keep_prob_inter", &keep_prob_inter, py::arg("p"), py::arg("c"));
  m.def("expected_noise_after_deletion", &expected_noise_after_deletion, py::arg("alpha"),
        py::arg("p"), py::arg("c"));
  m.def("deletion_improves", &deletion_improves, py::arg("p"), py::arg("c"));
  m.def("addition_threshold", &addition_threshold, py::arg("alpha"), py::arg("c"),
        py::arg("lambda_"));
  m.def("gamma_from_beta", &gamma_from_beta, py::arg("p"), py::arg("beta"));
  m.def("tna_accuracy_q", &tna_accuracy_q, py::arg("p"), py::arg("beta"), py::arg("c"));
  m.def("simulate_symmetric_classifier", &simulate_symmetric_classifier, py::arg("labels"),
        py::arg("p"), py::arg("c"), py::arg("seed"));
  m.def("simulate_correlated_pair", &simulate_correlated_pair, py::arg("labels"), py::arg("p"),
        py::arg("beta"), py::arg("c"), py::arg("seed"));
  m.def("empirical_tna_accuracy", &empirical_tna_accuracy, py::arg("labels"), py::arg("p"),
        py::arg("beta"), py::arg("c"), py::arg("trials"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("generate_graph_with_noise", &generate_graph_with_noise, py::arg("n"), py::arg("c"),
        py::arg("m"), py::arg("alpha"), py::arg("seed"));
  m.def("check_deletion", &check_deletion, py::arg("n"), py::arg("c"), py::arg("m"),
        py::arg("alpha"), py::arg("p"), py::arg("trials"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("check_addition", &check_addition, py::arg("n"), py::arg("c"), py::arg("m"),
        py::arg("alpha"), py::arg("p"), py::arg("trials"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
  m.def("check_tna", &check_tna, py::arg("n"), py::arg("c"), py::arg("p"), py::arg("beta"),
        py::arg("trials"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());

  // ---- evaluation harness ----
  py::class_<ProtocolConfig>(m, "ProtocolConfig")
      .def(py::init([](int train_pc, int val_pc, int n_splits, int n_seeds,
                       std::uint64_t master_seed) {
             ProtocolConfig cfg;
             cfg.n_train_per_class = train_pc;
             cfg.n_val_per_class = val_pc;
             cfg.n_splits = n_splits;
             cfg.n_seeds = n_seeds;
             cfg.master_seed = master_seed;
             return cfg;
           }),
           py::arg("n_train_per_class") = 20, py::arg("n_val_per_class") = 30,
           py::arg("n_splits") = 10, py::arg("n_seeds") = 10, py::arg("master_seed") = 0)
      .def_readwrite("n_train_per_class", &ProtocolConfig::n_train_per_class)
      .def_readwrite("n_val_per_class", &ProtocolConfig::n_val_per_class)
      .def_readwrite("n_splits", &ProtocolConfig::n_splits)
      .def_readwrite("n_seeds", &ProtocolConfig::n_seeds)
      .def_readwrite("master_seed", &ProtocolConfig::master_seed);

  py::class_<ProtocolOptions>(m, "ProtocolOptions")
      .def(py::init<>())
      .def_readwrite("model", &ProtocolOptions::model)
      .def_property(
          "tu_mode", [](const ProtocolOptions& o) { return to_string(o.tu_mode); },
          [](ProtocolOptions& o, const std::string& name) {
            o.tu_mode = tu_mode_from_string(name);
          })
      .def_readwrite("tu_grid", &ProtocolOptions::tu_grid)
      .def_readwrite("tna_grid", &ProtocolOptions::tna_grid)
      .def_readwrite("num_models", &ProtocolOptions::num_models)
      .def_readwrite("jobs", &ProtocolOptions::jobs);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("accuracies", &RunReport::accuracies)
      .def_readonly("mean", &RunReport::mean)
      .def_readonly("std_over_runs", &RunReport::std_over_runs)
      .def_readonly("std_over_split_means", &RunReport::std_over_split_means)
      .def_readonly("chosen_config", &RunReport::chosen_config);

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("x", &SweepRow::x)
      .def_readonly("mean", &SweepRow::mean)
      .def_readonly("std", &SweepRow::std);

  m.def("make_splits", &make_splits, py::arg("graph"), py::arg("protocol"));
  m.def("error_reduction", &error_reduction, py::arg("base_acc"), py::arg("new_acc"));
  m.def(
      "run_protocol",
      [](const Graph& g, const std::string& method, const ProtocolConfig& protocol,
         const ProtocolOptions& options) {
        py::gil_scoped_release release;
        return run_protocol(g, method_from_string(method), protocol, options);
      },
      py::arg("graph"), py::arg("method"), py::arg("protocol"), py::arg("options"));
  m.def(
      "noise_accuracy_sweep",
      [](const Graph& g, const std::string& mode, const std::vector<double>& fractions,
         const ProtocolConfig& protocol, const ProtocolOptions& options) {
        PerturbMode pm = perturb_mode_from_string(mode);
        py::gil_scoped_release release;
        return noise_accuracy_sweep(g, pm, fractions, protocol, options);
      },
      py::arg("graph"), py::arg("mode"), py::arg("fractions"), py::arg("protocol"),
      py::arg("options"));
  m.def("trainsize_accuracy_sweep", &trainsize_accuracy_sweep, py::arg("graph"), py::arg("sizes"),
        py::arg("protocol"), py::arg("options"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "reliability_curve",
      [](const Matrix& preds, const std::vector<int>& labels, int num_bins) {
        auto bins = reliability_curve(preds, labels, num_bins);
        py::list out;
        for (const auto& b : bins)
          out.append(py::make_tuple(b.lo, b.hi, b.mean_confidence, b.accuracy, b.count));
        return out;
      },
      py::arg("preds"), py::arg("labels"), py::arg("num_bins"),
      "rows of (lo, hi, mean_confidence, accuracy, count)");
  m.def(
      "correlation_samelabel_curve",
      [](const Matrix& preds, const std::vector<int>& labels, std::int64_t pair_sample,
         int num_bins, std::uint64_t seed) {
        auto bins = correlation_samelabel_curve(preds, labels, pair_sample, num_bins, seed);
        py::list out;
        for (const auto& b : bins)
          out.append(
              py::make_tuple(b.lo, b.hi, b.mean_correlation, b.same_label_fraction, b.count));
        return out;
      },
      py::arg("preds"), py::arg("labels"), py::arg("pair_sample"), py::arg("num_bins"),
      py::arg("seed"), "rows of (lo, hi, mean_correlation, same_label_fraction, count)");

  py::class_<SegPipelineResult>(m, "SegPipelineResult")
      .def_readonly("test_accuracy", &SegPipelineResult::test_accuracy)
      .def_readonly("chosen", &SegPipelineResult::chosen)
      .def_readonly("val_tu", &SegPipelineResult::val_tu)
      .def_readonly("val_tna", &SegPipelineResult::val_tna)
      .def_readonly("val_both", &SegPipelineResult::val_both);

  m.def(
      "seg_pipeline",
      [](const Graph& g, const Split& split, const ModelConfig& cfg, const TuneTUResult& tu,
         const TuneTNAResult& tna, int num_models, std::uint64_t eval_seed) {
        py::gil_scoped_release release;
        return seg_pipeline(g, split, cfg, tu, tna, num_models, eval_seed);
      },
      py::arg("graph"), py::arg("split"), py::arg("config"), py::arg("tu_best"),
      py::arg("tna_best"), py::arg("num_models"), py::arg("eval_seed"));
}
