#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "seg/augment.hpp"
#include "seg/common.hpp"
#include "seg/graph.hpp"
#include "seg/harness.hpp"
#include "seg/model.hpp"
#include "seg/rng.hpp"
#include "seg/theory.hpp"
#include "seg/topology.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seg;

namespace {

// All reports land on disk atomically: temp file in the target directory,
// then rename.
void atomic_write(const fs::path& path, const std::string& contents) {
  fs::path dir = path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
  }
  fs::rename(tmp, path);
}

void write_report(const fs::path& path, const json& doc) {
  atomic_write(path, doc.dump(2) + "\n");
}

int resolve_jobs(int jobs_flag) {
  if (jobs_flag > 0) return jobs_flag;
  if (const char* env = std::getenv("SEG_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return default_jobs();
}

Split load_split_file(const fs::path& path, std::int64_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  Split split;
  split.train = doc.at("train").get<std::vector<std::int32_t>>();
  split.val = doc.value("val", std::vector<std::int32_t>{});
  split.test = doc.value("test", std::vector<std::int32_t>{});
  split.validate(num_nodes);
  return split;
}

/// Stratified fallback split when no --split-file is given.
Split default_split(const Graph& graph, int train_pc, int val_pc, std::uint64_t seed) {
  ProtocolConfig protocol;
  protocol.n_train_per_class = train_pc;
  protocol.n_val_per_class = val_pc;
  protocol.n_splits = 1;
  protocol.master_seed = seed;
  return make_splits(graph, protocol)[0];
}

std::vector<TUThresholds> load_tu_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  std::vector<TUThresholds> grid;
  for (const auto& item : doc) {
    TUThresholds t;
    t.tau_d = item.value("tau_d", 0.0);
    t.tau_a = item.value("tau_a", 1.0);
    t.max_added_ratio = item.value("max_added_ratio", 2.0);
    t.pool_ratio = item.value("pool_ratio", 4.0);
    t.topk = item.value("topk", 0);
    grid.push_back(t);
  }
  return grid;
}

std::vector<double> load_tau_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open grid file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return doc.get<std::vector<double>>();
}

json thresholds_to_json(const TUThresholds& t) {
  return {{"tau_d", t.tau_d},
          {"tau_a", t.tau_a},
          {"max_added_ratio", t.max_added_ratio},
          {"pool_ratio", t.pool_ratio},
          {"topk", t.topk}};
}

json model_config_to_json(const ModelConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},     {"hidden_dim", cfg.hidden_dim},
          {"hops", cfg.hops},                {"dropout", cfg.dropout},
          {"learning_rate", cfg.learning_rate}, {"weight_decay", cfg.weight_decay},
          {"epochs", cfg.epochs},            {"seed", cfg.seed}};
}

struct ModelFlags {
  std::string kind = "sgc";
  int epochs = 400;
  int hidden_dim = 16;
  int hops = 2;
  double dropout = 0.5;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", kind, "Model kind: sgc|gcn")->check(CLI::IsMember({"sgc", "gcn"}));
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--hidden-dim", hidden_dim, "GCN hidden width");
    cmd->add_option("--hops", hops, "SGC propagation hops");
    cmd->add_option("--dropout", dropout, "GCN dropout rate");
    cmd->add_option("--lr", learning_rate, "Adam learning rate");
    cmd->add_option("--weight-decay", weight_decay, "L2 coefficient on weights");
  }

  ModelConfig to_config(std::uint64_t seed) const {
    ModelConfig cfg;
    cfg.kind = model_kind_from_string(kind);
    cfg.epochs = epochs;
    cfg.hidden_dim = hidden_dim;
    cfg.hops = hops;
    cfg.dropout = dropout;
    cfg.learning_rate = learning_rate;
    cfg.weight_decay = weight_decay;
    cfg.seed = seed;
    return cfg;
  }
};

std::string num_field(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Self-enhanced GNN toolkit: topology update, training node "
               "augmentation, theory checks and the evaluation protocol"};
  app.require_subcommand(1);
  int jobs_flag = 0;
  app.add_option("--jobs", jobs_flag, "Worker threads (0 = SEG_JOBS env or all cores)");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "Generate a planted-partition dataset");
  PlantedPartitionSpec spec;
  std::string synth_out;
  synth->add_option("--n", spec.n, "Nodes")->required();
  synth->add_option("--c", spec.c, "Classes")->required();
  synth->add_option("--p-intra", spec.p_intra, "Within-class edge probability")->required();
  synth->add_option("--p-inter", spec.p_inter, "Cross-class edge probability")->required();
  synth->add_option("--dim", spec.feature_dim, "Feature dimension");
  synth->add_option("--signal", spec.feature_signal, "Class-mean feature scale");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();
  synth->callback([&] {
    Graph g = generate_planted_partition(spec);
    save_graph(g, synth_out);
    auto report = noise_ratio(g);
    std::printf("nodes %lld edges %lld noise_ratio %.4f\n",
                static_cast<long long>(g.num_nodes()), static_cast<long long>(g.num_edges()),
                report.noise_ratio);
  });

  // ---- noise ----
  auto* noise = app.add_subcommand("noise", "Report the noise ratio of a dataset");
  std::string noise_graph, noise_out;
  noise->add_option("--graph", noise_graph, "Dataset directory or manifest")->required();
  noise->add_option("--out", noise_out, "Optional JSON report path");
  noise->callback([&] {
    Graph g = load_graph(noise_graph);
    auto report = noise_ratio(g);
    std::printf("edges %lld inter %lld intra %lld noise_ratio %.4f\n",
                static_cast<long long>(report.num_edges),
                static_cast<long long>(report.num_inter),
                static_cast<long long>(report.num_intra), report.noise_ratio);
    if (report.zero_edges) std::fprintf(stderr, "warning: graph has no edges\n");
    if (!noise_out.empty()) {
      write_report(noise_out, json{{"config", {{"graph", noise_graph}}},
                                   {"num_edges", report.num_edges},
                                   {"num_inter", report.num_inter},
                                   {"num_intra", report.num_intra},
                                   {"noise_ratio", report.noise_ratio},
                                   {"zero_edges", report.zero_edges}});
    }
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train a model and save its weights");
  std::string train_graph, train_split, train_out;
  ModelFlags train_flags;
  std::uint64_t train_seed = 0;
  int train_pc = 20, val_pc = 30;
  train_cmd->add_option("--graph", train_graph, "Dataset directory or manifest")->required();
  train_flags.attach(train_cmd);
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_option("--split-file", train_split, "JSON split {train, val, test}");
  train_cmd->add_option("--train-per-class", train_pc, "Fallback split: train nodes per class");
  train_cmd->add_option("--val-per-class", val_pc, "Fallback split: val nodes per class");
  train_cmd->add_option("--out", train_out, "Model JSON path")->required();
  train_cmd->callback([&] {
    Graph g = load_graph(train_graph);
    Split split = train_split.empty() ? default_split(g, train_pc, val_pc, train_seed)
                                      : load_split_file(train_split, g.num_nodes());
    TrainedModel model = seg::train(g, split, train_flags.to_config(train_seed));
    Matrix preds = predict(model, g);
    save_model(model, train_out);
    std::printf("train_acc %.4f", accuracy(preds, g, split.train));
    if (!split.val.empty()) std::printf(" val_acc %.4f", accuracy(preds, g, split.val));
    if (!split.test.empty()) std::printf(" test_acc %.4f", accuracy(preds, g, split.test));
    std::printf("\n");
  });

  // ---- tu ----
  auto* tu_cmd = app.add_subcommand("tu", "Tune and apply a topology update");
  std::string tu_graph, tu_mode_name = "delete", tu_grid_file, tu_report, tu_split_file,
              tu_out_graph;
  ModelFlags tu_flags;
  std::uint64_t tu_seed = 0;
  int tu_train_pc = 20, tu_val_pc = 30;
  tu_cmd->add_option("--graph", tu_graph, "Dataset directory or manifest")->required();
  tu_cmd->add_option("--mode", tu_mode_name, "delete|add|modify")
      ->check(CLI::IsMember({"delete", "add", "modify"}));
  tu_flags.attach(tu_cmd);
  tu_cmd->add_option("--grid", tu_grid_file, "JSON list of threshold objects");
  tu_cmd->add_option("--seed", tu_seed, "Master seed");
  tu_cmd->add_option("--split-file", tu_split_file, "JSON split file");
  tu_cmd->add_option("--train-per-class", tu_train_pc, "Fallback split train count");
  tu_cmd->add_option("--val-per-class", tu_val_pc, "Fallback split val count");
  tu_cmd->add_option("--report", tu_report, "JSON report path");
  tu_cmd->add_option("--out-graph", tu_out_graph, "Save the updated dataset here");
  tu_cmd->callback([&] {
    Graph g = load_graph(tu_graph);
    TUMode mode = tu_mode_from_string(tu_mode_name);
    Split split = tu_split_file.empty() ? default_split(g, tu_train_pc, tu_val_pc, tu_seed)
                                        : load_split_file(tu_split_file, g.num_nodes());
    auto grid = tu_grid_file.empty() ? default_tu_grid(mode) : load_tu_grid(tu_grid_file);
    ModelConfig cfg = tu_flags.to_config(tu_seed);
    auto result = tune_tu(g, split, cfg, mode, grid, resolve_jobs(jobs_flag));

    auto before = noise_ratio(g);
    auto after = noise_ratio(result.updated);
    std::printf("best tau_d %.3f tau_a %.3f val_acc %.4f deleted %zu added %zu "
                "noise %.4f -> %.4f\n",
                result.best.tau_d, result.best.tau_a, result.val_accuracy,
                result.decision.deletions.size(), result.decision.additions.size(),
                before.noise_ratio, after.noise_ratio);
    if (!tu_out_graph.empty()) save_graph(result.updated, tu_out_graph);
    if (!tu_report.empty()) {
      json grid_json = json::array();
      for (const auto& point : result.grid)
        grid_json.push_back({{"thresholds", thresholds_to_json(point.thresholds)},
                             {"val_accuracy", point.val_accuracy},
                             {"num_deleted", point.num_deleted},
                             {"num_added", point.num_added}});
      write_report(tu_report,
                   json{{"config",
                         {{"graph", tu_graph},
                          {"mode", tu_mode_name},
                          {"model", model_config_to_json(cfg)},
                          {"seed", tu_seed}}},
                        {"best", thresholds_to_json(result.best)},
                        {"val_accuracy", result.val_accuracy},
                        {"num_deleted", result.decision.deletions.size()},
                        {"num_added", result.decision.additions.size()},
                        {"noise_ratio_before", before.noise_ratio},
                        {"noise_ratio_after", after.noise_ratio},
                        {"grid", grid_json}});
    }
  });

  // ---- tna ----
  auto* tna_cmd = app.add_subcommand("tna", "Tune training node augmentation");
  std::string tna_graph, tna_grid_file, tna_report, tna_split_file;
  ModelFlags tna_flags;
  std::uint64_t tna_seed = 0;
  int tna_L = 2, tna_train_pc = 20, tna_val_pc = 30;
  tna_cmd->add_option("--graph", tna_graph, "Dataset directory or manifest")->required();
  tna_flags.attach(tna_cmd);
  tna_cmd->add_option("--L", tna_L, "Ensemble size");
  tna_cmd->add_option("--tau-grid", tna_grid_file, "JSON list of tau_c values");
  tna_cmd->add_option("--seed", tna_seed, "Master seed");
  tna_cmd->add_option("--split-file", tna_split_file, "JSON split file");
  tna_cmd->add_option("--train-per-class", tna_train_pc, "Fallback split train count");
  tna_cmd->add_option("--val-per-class", tna_val_pc, "Fallback split val count");
  tna_cmd->add_option("--report", tna_report, "JSON report path");
  tna_cmd->callback([&] {
    Graph g = load_graph(tna_graph);
    Split split = tna_split_file.empty() ? default_split(g, tna_train_pc, tna_val_pc, tna_seed)
                                         : load_split_file(tna_split_file, g.num_nodes());
    auto grid = tna_grid_file.empty() ? default_tna_grid() : load_tau_grid(tna_grid_file);
    ModelConfig cfg = tna_flags.to_config(tna_seed);
    auto result = tune_tna(g, split, cfg, tna_L, grid, tna_seed, resolve_jobs(jobs_flag));

    std::vector<std::int64_t> per_class(g.num_classes(), 0);
    std::int64_t errors = 0;
    for (const auto& e : result.augmented.entries) {
      per_class[e.pseudo_label]++;
      if (e.pseudo_label != g.labels()[e.node]) ++errors;
    }
    std::printf("best tau_c %.3f val_acc %.4f added %zu errors %lld\n", result.best_tau_c,
                result.val_accuracy, result.augmented.entries.size(),
                static_cast<long long>(errors));
    if (!tna_report.empty()) {
      json grid_json = json::array();
      for (const auto& point : result.grid)
        grid_json.push_back({{"tau_c", point.tau_c},
                             {"val_accuracy", point.val_accuracy},
                             {"num_added", point.num_added}});
      json entries = json::array();
      for (const auto& e : result.augmented.entries)
        entries.push_back({{"node", e.node},
                           {"pseudo_label", e.pseudo_label},
                           {"min_confidence", e.min_confidence}});
      write_report(tna_report,
                   json{{"config",
                         {{"graph", tna_graph},
                          {"L", tna_L},
                          {"model", model_config_to_json(cfg)},
                          {"seed", tna_seed}}},
                        {"best_tau_c", result.best_tau_c},
                        {"val_accuracy", result.val_accuracy},
                        {"num_added", result.augmented.entries.size()},
                        {"per_class_counts", per_class},
                        {"pseudo_label_errors", errors},
                        {"entries", entries},
                        {"grid", grid_json}});
    }
  });

  // ---- theory ----
  auto* theory_cmd = app.add_subcommand("theory", "Closed form vs Monte-Carlo checks");
  std::string check_name;
  double th_p = 0.8, th_alpha = 0.19, th_beta = 0.8, th_lambda = 0.005;
  int th_c = 7, th_trials = 30;
  std::int64_t th_n = 1000;
  std::uint64_t th_seed = 0;
  std::string theory_out;
  theory_cmd->add_option("--check", check_name, "deletion|addition|tna")
      ->required()
      ->check(CLI::IsMember({"deletion", "addition", "tna"}));
  theory_cmd->add_option("--p", th_p, "Classifier accuracy");
  theory_cmd->add_option("--c", th_c, "Number of classes");
  theory_cmd->add_option("--alpha", th_alpha, "Noise ratio");
  theory_cmd->add_option("--beta", th_beta, "Conditional agreement");
  theory_cmd->add_option("--lambda", th_lambda, "Edge density m/n^2");
  theory_cmd->add_option("--trials", th_trials, "Trials (tna: total samples)");
  theory_cmd->add_option("--n", th_n, "Simulation graph size");
  theory_cmd->add_option("--seed", th_seed, "Simulation seed");
  theory_cmd->add_option("--out", theory_out, "Optional JSON report path");
  theory_cmd->callback([&] {
    MonteCarloCheck check;
    auto m = static_cast<std::int64_t>(std::llround(th_lambda * static_cast<double>(th_n) *
                                                    static_cast<double>(th_n)));
    if (check_name == "deletion") {
      check = check_deletion(th_n, th_c, m, th_alpha, th_p, std::max(th_trials, 2), th_seed);
    } else if (check_name == "addition") {
      std::int64_t n_small = std::min<std::int64_t>(th_n, 300);
      auto m_small = static_cast<std::int64_t>(std::llround(
          th_lambda * static_cast<double>(n_small) * static_cast<double>(n_small)));
      check = check_addition(n_small, th_c, m_small, th_alpha, th_p, std::max(th_trials, 2),
                             th_seed);
    } else {
      // --trials counts total simulated nodes for the tna check
      std::int64_t per_pass = std::min<std::int64_t>(std::max<std::int64_t>(th_trials, 1),
                                                     100'000);
      int passes = static_cast<int>((th_trials + per_pass - 1) / per_pass);
      check = check_tna(per_pass, th_c, th_p, th_beta, std::max(passes, 1), th_seed);
    }
    json doc{{"config",
              {{"check", check_name},
               {"p", th_p},
               {"c", th_c},
               {"alpha", th_alpha},
               {"beta", th_beta},
               {"lambda", th_lambda},
               {"trials", th_trials},
               {"n", th_n},
               {"seed", th_seed}}},
             {"closed_form", check.closed_form},
             {"monte_carlo", check.monte_carlo},
             {"sigma", check.sigma},
             {"pass", check.pass}};
    if (check_name != "tna") doc["alpha_before"] = check.alpha_before;
    std::printf("%s\n", doc.dump(2).c_str());
    if (!theory_out.empty()) write_report(theory_out, doc);
  });

  // ---- protocol ----
  auto* proto_cmd = app.add_subcommand("protocol", "Run the split/seed evaluation protocol");
  std::string proto_graph, proto_method = "baseline", proto_out, proto_tu_mode = "delete";
  std::string proto_tu_grid_file, proto_tna_grid_file;
  ModelFlags proto_flags;
  ProtocolConfig protocol;
  int proto_L = 2;
  proto_cmd->add_option("--graph", proto_graph, "Dataset directory or manifest")->required();
  proto_cmd->add_option("--method", proto_method, "baseline|tu|tna|seg")
      ->check(CLI::IsMember({"baseline", "tu", "tna", "seg"}));
  proto_flags.attach(proto_cmd);
  proto_cmd->add_option("--tu-mode", proto_tu_mode, "delete|add|modify")
      ->check(CLI::IsMember({"delete", "add", "modify"}));
  proto_cmd->add_option("--tu-grid", proto_tu_grid_file, "JSON threshold grid");
  proto_cmd->add_option("--tna-grid", proto_tna_grid_file, "JSON tau_c grid");
  proto_cmd->add_option("--L", proto_L, "TNA ensemble size");
  proto_cmd->add_option("--splits", protocol.n_splits, "Number of dataset splits");
  proto_cmd->add_option("--seeds", protocol.n_seeds, "Model seeds per split");
  proto_cmd->add_option("--train-per-class", protocol.n_train_per_class, "Train nodes per class");
  proto_cmd->add_option("--val-per-class", protocol.n_val_per_class, "Val nodes per class");
  proto_cmd->add_option("--master-seed", protocol.master_seed, "Master seed");
  proto_cmd->add_option("--out", proto_out, "JSON report path");
  proto_cmd->callback([&] {
    Graph g = load_graph(proto_graph);
    Method method = method_from_string(proto_method);
    ProtocolOptions options;
    options.model = proto_flags.to_config(0);
    options.tu_mode = tu_mode_from_string(proto_tu_mode);
    if (!proto_tu_grid_file.empty()) options.tu_grid = load_tu_grid(proto_tu_grid_file);
    if (!proto_tna_grid_file.empty()) options.tna_grid = load_tau_grid(proto_tna_grid_file);
    options.num_models = proto_L;
    options.jobs = resolve_jobs(jobs_flag);

    RunReport report = run_protocol(g, method, protocol, options);
    json doc{{"config",
              {{"graph", proto_graph},
               {"method", proto_method},
               {"tu_mode", proto_tu_mode},
               {"L", proto_L},
               {"model", model_config_to_json(options.model)},
               {"splits", protocol.n_splits},
               {"seeds", protocol.n_seeds},
               {"train_per_class", protocol.n_train_per_class},
               {"val_per_class", protocol.n_val_per_class},
               {"master_seed", protocol.master_seed}}},
             {"accuracies", report.accuracies},
             {"mean", report.mean},
             {"std_over_runs", report.std_over_runs},
             {"std_over_split_means", report.std_over_split_means},
             {"chosen_config", report.chosen_config}};
    if (method != Method::Baseline) {
      RunReport base = run_protocol(g, Method::Baseline, protocol, options);
      doc["baseline_mean"] = base.mean;
      doc["error_reduction_vs_baseline"] = error_reduction(base.mean, report.mean);
    }
    std::printf("method %s mean %.4f std %.4f (split-mean std %.4f)\n", proto_method.c_str(),
                report.mean, report.std_over_runs, report.std_over_split_means);
    if (!proto_out.empty()) write_report(proto_out, doc);
  });

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "Noise-ratio or train-size sweeps");
  std::string sweep_kind, sweep_graph, sweep_mode = "delete", sweep_out;
  std::vector<double> sweep_fractions;
  std::vector<int> sweep_sizes;
  ModelFlags sweep_flags;
  ProtocolConfig sweep_protocol;
  bool sweep_csv = false;
  sweep_cmd->add_option("--kind", sweep_kind, "noise|trainsize")
      ->required()
      ->check(CLI::IsMember({"noise", "trainsize"}));
  sweep_cmd->add_option("--graph", sweep_graph, "Dataset directory or manifest")->required();
  sweep_cmd->add_option("--mode", sweep_mode, "noise sweep perturbation: delete|add")
      ->check(CLI::IsMember({"delete", "add"}));
  sweep_cmd->add_option("--fractions", sweep_fractions, "Perturbation fractions")
      ->delimiter(',');
  sweep_cmd->add_option("--sizes", sweep_sizes, "Train-set sizes per class")->delimiter(',');
  sweep_flags.attach(sweep_cmd);
  sweep_cmd->add_option("--splits", sweep_protocol.n_splits, "Splits");
  sweep_cmd->add_option("--seeds", sweep_protocol.n_seeds, "Seeds per split");
  sweep_cmd->add_option("--train-per-class", sweep_protocol.n_train_per_class,
                        "Train nodes per class");
  sweep_cmd->add_option("--val-per-class", sweep_protocol.n_val_per_class, "Val nodes per class");
  sweep_cmd->add_option("--master-seed", sweep_protocol.master_seed, "Master seed");
  sweep_cmd->add_flag("--csv", sweep_csv, "Write CSV instead of JSON");
  sweep_cmd->add_option("--out", sweep_out, "Report path")->required();
  sweep_cmd->callback([&] {
    Graph g = load_graph(sweep_graph);
    ProtocolOptions options;
    options.model = sweep_flags.to_config(0);
    options.jobs = resolve_jobs(jobs_flag);
    std::vector<SweepRow> rows;
    std::string x_name;
    if (sweep_kind == "noise") {
      if (sweep_fractions.empty()) throw ConfigError("--fractions required for noise sweeps");
      PerturbMode mode =
          sweep_mode == "delete" ? PerturbMode::DeleteInter : PerturbMode::AddIntra;
      rows = noise_accuracy_sweep(g, mode, sweep_fractions, sweep_protocol, options);
      x_name = "noise_ratio";
    } else {
      if (sweep_sizes.empty()) throw ConfigError("--sizes required for trainsize sweeps");
      rows = trainsize_accuracy_sweep(g, sweep_sizes, sweep_protocol, options);
      x_name = "train_per_class";
    }
    if (sweep_csv) {
      std::string csv = x_name + ",mean_accuracy,std\n";
      for (const auto& r : rows)
        csv += num_field(r.x) + "," + num_field(r.mean) + "," + num_field(r.std) + "\n";
      atomic_write(sweep_out, csv);
    } else {
      json rows_json = json::array();
      for (const auto& r : rows)
        rows_json.push_back({{x_name, r.x}, {"mean_accuracy", r.mean}, {"std", r.std}});
      write_report(sweep_out, json{{"config",
                                    {{"kind", sweep_kind},
                                     {"graph", sweep_graph},
                                     {"mode", sweep_mode},
                                     {"fractions", sweep_fractions},
                                     {"sizes", sweep_sizes},
                                     {"model", model_config_to_json(options.model)},
                                     {"splits", sweep_protocol.n_splits},
                                     {"seeds", sweep_protocol.n_seeds},
                                     {"master_seed", sweep_protocol.master_seed}}},
                                   {"rows", rows_json}});
    }
    for (const auto& r : rows)
      std::printf("%s %.4f mean %.4f std %.4f\n", x_name.c_str(), r.x, r.mean, r.std);
  });

  // ---- curves ----
  auto* curves_cmd = app.add_subcommand("curves", "Reliability and label-correlation curves");
  std::string curves_kind, curves_graph, curves_out;
  ModelFlags curves_flags;
  std::uint64_t curves_seed = 0;
  int curves_bins = 10, curves_train_pc = 20, curves_val_pc = 30;
  std::int64_t curves_pairs = 20000;
  bool curves_csv = false;
  curves_cmd->add_option("--kind", curves_kind, "reliability|correlation")
      ->required()
      ->check(CLI::IsMember({"reliability", "correlation"}));
  curves_cmd->add_option("--graph", curves_graph, "Dataset directory or manifest")->required();
  curves_flags.attach(curves_cmd);
  curves_cmd->add_option("--seed", curves_seed, "Training seed");
  curves_cmd->add_option("--bins", curves_bins, "Number of bins");
  curves_cmd->add_option("--pair-sample", curves_pairs, "Sampled pairs (correlation)");
  curves_cmd->add_option("--train-per-class", curves_train_pc, "Split train count");
  curves_cmd->add_option("--val-per-class", curves_val_pc, "Split val count");
  curves_cmd->add_flag("--csv", curves_csv, "Write CSV instead of JSON");
  curves_cmd->add_option("--out", curves_out, "Report path")->required();
  curves_cmd->callback([&] {
    Graph g = load_graph(curves_graph);
    Split split = default_split(g, curves_train_pc, curves_val_pc, curves_seed);
    TrainedModel model = seg::train(g, split, curves_flags.to_config(curves_seed));
    Matrix preds = predict(model, g);

    std::string csv;
    json rows = json::array();
    if (curves_kind == "reliability") {
      // evaluated on the test nodes, where confidence is not memorized
      Matrix test_preds(static_cast<std::int64_t>(split.test.size()), preds.cols());
      std::vector<int> test_labels(split.test.size());
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        test_preds.row(static_cast<std::int64_t>(i)) = preds.row(split.test[i]);
        test_labels[i] = g.labels()[split.test[i]];
      }
      auto bins = reliability_curve(test_preds, test_labels, curves_bins);
      csv = "bin_lo,bin_hi,mean_confidence,accuracy,count\n";
      for (const auto& b : bins) {
        rows.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"mean_confidence", b.mean_confidence},
                        {"accuracy", b.accuracy},
                        {"count", b.count}});
        csv += num_field(b.lo) + "," + num_field(b.hi) + "," + num_field(b.mean_confidence) +
               "," + num_field(b.accuracy) + "," + std::to_string(b.count) + "\n";
      }
    } else {
      auto bins = correlation_samelabel_curve(preds, g.labels(), curves_pairs, curves_bins,
                                              curves_seed);
      csv = "bin_lo,bin_hi,mean_correlation,same_label_fraction,count\n";
      for (const auto& b : bins) {
        rows.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"mean_correlation", b.mean_correlation},
                        {"same_label_fraction", b.same_label_fraction},
                        {"count", b.count}});
        csv += num_field(b.lo) + "," + num_field(b.hi) + "," + num_field(b.mean_correlation) +
               "," + num_field(b.same_label_fraction) + "," + std::to_string(b.count) + "\n";
      }
    }
    if (curves_csv) {
      atomic_write(curves_out, csv);
    } else {
      write_report(curves_out,
                   json{{"config",
                         {{"kind", curves_kind},
                          {"graph", curves_graph},
                          {"model", model_config_to_json(curves_flags.to_config(curves_seed))},
                          {"bins", curves_bins},
                          {"pair_sample", curves_pairs},
                          {"seed", curves_seed}}},
                        {"rows", rows}});
    }
    std::printf("%s curve with %d bins written to %s\n", curves_kind.c_str(), curves_bins,
                curves_out.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}

int main(int argc, char** argv) { return dispatch(argc, argv); }
