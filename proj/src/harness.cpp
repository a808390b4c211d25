#include "seg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

namespace {

double sample_std(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (static_cast<double>(values.size()) - 1.0));
}

std::uint64_t eval_seed_for(std::uint64_t master, int split_index, int seed_index) {
  return derive_seed(master, {stage::kEvalModel, static_cast<std::uint64_t>(split_index),
                              static_cast<std::uint64_t>(seed_index)});
}

}  // namespace

void ProtocolConfig::validate() const {
  if (n_train_per_class < 1 || n_val_per_class < 0)
    throw ConfigError("protocol: per-class counts must be positive");
  if (n_splits < 1 || n_seeds < 1) throw ConfigError("protocol: splits and seeds must be >= 1");
}

std::vector<Split> make_splits(const Graph& graph, const ProtocolConfig& protocol) {
  protocol.validate();
  std::vector<std::vector<std::int32_t>> by_class(graph.num_classes());
  for (std::int64_t v = 0; v < graph.num_nodes(); ++v)
    by_class[graph.labels()[v]].push_back(static_cast<std::int32_t>(v));
  const std::size_t need =
      static_cast<std::size_t>(protocol.n_train_per_class) + protocol.n_val_per_class;
  for (int k = 0; k < graph.num_classes(); ++k) {
    if (by_class[k].size() < need)
      throw ConfigError("class " + std::to_string(k) + " has " +
                        std::to_string(by_class[k].size()) + " nodes, needs " +
                        std::to_string(need));
  }

  std::vector<Split> splits;
  splits.reserve(protocol.n_splits);
  for (int s = 0; s < protocol.n_splits; ++s) {
    Rng rng(derive_seed(protocol.master_seed,
                        {stage::kSplitSampling, static_cast<std::uint64_t>(s)}));
    Split split;
    for (int k = 0; k < graph.num_classes(); ++k) {
      std::vector<std::int32_t> pool = by_class[k];
      rng.shuffle(pool);
      split.train.insert(split.train.end(), pool.begin(), pool.begin() + protocol.n_train_per_class);
      split.val.insert(split.val.end(), pool.begin() + protocol.n_train_per_class,
                       pool.begin() + need);
      split.test.insert(split.test.end(), pool.begin() + need, pool.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    splits.push_back(std::move(split));
  }
  return splits;
}

double error_reduction(double base_acc, double new_acc) {
  if (base_acc >= 1.0) throw ConfigError("error_reduction: base accuracy must be < 1");
  return (new_acc - base_acc) / (1.0 - base_acc);
}

Method method_from_string(const std::string& name) {
  if (name == "baseline") return Method::Baseline;
  if (name == "tu") return Method::TU;
  if (name == "tna") return Method::TNA;
  if (name == "seg") return Method::SEG;
  throw ConfigError("unknown method: " + name);
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Baseline: return "baseline";
    case Method::TU: return "tu";
    case Method::TNA: return "tna";
    default: return "seg";
  }
}

void RunReport::recompute() {
  std::vector<double> all;
  std::vector<double> split_means;
  for (const auto& row : accuracies) {
    double row_mean = 0.0;
    for (double a : row) {
      all.push_back(a);
      row_mean += a;
    }
    if (!row.empty()) split_means.push_back(row_mean / static_cast<double>(row.size()));
  }
  mean = all.empty() ? 0.0 : std::accumulate(all.begin(), all.end(), 0.0) / all.size();
  std_over_runs = sample_std(all, mean);
  double sm = split_means.empty()
                  ? 0.0
                  : std::accumulate(split_means.begin(), split_means.end(), 0.0) /
                        split_means.size();
  std_over_split_means = sample_std(split_means, sm);
}

AugmentedTrainSet joint_augment(const Graph& updated, const Split& split,
                                const ModelConfig& base_config, int num_models, double tau_c,
                                std::uint64_t seed) {
  auto swapped = swap_train_val(split, num_models, seed);
  std::vector<Matrix> preds(num_models);
  for (int l = 0; l < num_models; ++l) {
    ModelConfig cfg = base_config;
    cfg.seed = derive_seed(seed, {stage::kEnsembleModel, static_cast<std::uint64_t>(l)});
    preds[l] = predict(train(updated, swapped[l], cfg), updated);
  }
  return class_balance(augment(preds, split, tau_c), updated.num_classes());
}

SegPipelineResult seg_pipeline(const Graph& graph, const Split& split,
                               const ModelConfig& base_config, const TuneTUResult& tu_best,
                               const TuneTNAResult& tna_best, const AugmentedTrainSet& joint_aug,
                               std::uint64_t eval_seed) {
  ModelConfig cfg = base_config;
  cfg.seed = eval_seed;

  SegPipelineResult result;
  // TU only
  TrainedModel m_tu = train(tu_best.updated, split, cfg);
  Matrix p_tu = predict(m_tu, tu_best.updated);
  result.val_tu = accuracy(p_tu, tu_best.updated, split.val);
  double test_tu = accuracy(p_tu, tu_best.updated, split.test);
  // TNA only
  TrainedModel m_tna = train_on(graph, augmented_train_set(graph, split, tna_best.augmented), cfg);
  Matrix p_tna = predict(m_tna, graph);
  result.val_tna = accuracy(p_tna, graph, split.val);
  double test_tna = accuracy(p_tna, graph, split.test);
  // TU then TNA on the updated graph
  TrainedModel m_both =
      train_on(tu_best.updated, augmented_train_set(tu_best.updated, split, joint_aug), cfg);
  Matrix p_both = predict(m_both, tu_best.updated);
  result.val_both = accuracy(p_both, tu_best.updated, split.val);
  double test_both = accuracy(p_both, tu_best.updated, split.test);

  result.chosen = "tu";
  result.test_accuracy = test_tu;
  double best_val = result.val_tu;
  if (result.val_tna > best_val) {
    best_val = result.val_tna;
    result.chosen = "tna";
    result.test_accuracy = test_tna;
  }
  if (result.val_both > best_val) {
    result.chosen = "both";
    result.test_accuracy = test_both;
  }
  return result;
}

SegPipelineResult seg_pipeline(const Graph& graph, const Split& split,
                               const ModelConfig& base_config, const TuneTUResult& tu_best,
                               const TuneTNAResult& tna_best, int num_models,
                               std::uint64_t eval_seed) {
  AugmentedTrainSet joint =
      joint_augment(tu_best.updated, split, base_config, num_models, tna_best.best_tau_c,
                    derive_seed(eval_seed, {stage::kJointTNA}));
  return seg_pipeline(graph, split, base_config, tu_best, tna_best, joint, eval_seed);
}

RunReport run_protocol(const Graph& graph, Method method, const ProtocolConfig& protocol,
                       const ProtocolOptions& options) {
  protocol.validate();
  options.model.validate();
  auto splits = make_splits(graph, protocol);
  const auto tu_grid =
      options.tu_grid.empty() ? default_tu_grid(options.tu_mode) : options.tu_grid;
  const auto tna_grid = options.tna_grid.empty() ? default_tna_grid() : options.tna_grid;

  RunReport report;
  report.accuracies.assign(protocol.n_splits, std::vector<double>(protocol.n_seeds, 0.0));
  std::vector<std::string> chosen(protocol.n_splits);

  const int outer_jobs = std::max(1, options.jobs);
  const int inner_jobs = protocol.n_splits >= outer_jobs
                             ? 1
                             : std::max(1, outer_jobs / protocol.n_splits);

  parallel_for(static_cast<std::size_t>(protocol.n_splits), outer_jobs, [&](std::size_t si) {
    const auto s = static_cast<int>(si);
    const Split& split = splits[si];

    if (method == Method::Baseline) {
      for (int j = 0; j < protocol.n_seeds; ++j) {
        ModelConfig cfg = options.model;
        cfg.seed = eval_seed_for(protocol.master_seed, s, j);
        Matrix preds = predict(train(graph, split, cfg), graph);
        report.accuracies[si][j] = accuracy(preds, graph, split.test);
      }
      chosen[si] = "baseline";
      return;
    }

    if (method == Method::TU) {
      ModelConfig tune_cfg = options.model;
      tune_cfg.seed = derive_seed(protocol.master_seed,
                                  {stage::kTuneTU, static_cast<std::uint64_t>(s)});
      TuneTUResult tu = tune_tu(graph, split, tune_cfg, options.tu_mode, tu_grid, inner_jobs);
      for (int j = 0; j < protocol.n_seeds; ++j) {
        ModelConfig cfg = options.model;
        cfg.seed = eval_seed_for(protocol.master_seed, s, j);
        Matrix preds = predict(train(tu.updated, split, cfg), tu.updated);
        report.accuracies[si][j] = accuracy(preds, tu.updated, split.test);
      }
      std::ostringstream desc;
      desc << "tu(" << to_string(options.tu_mode) << ") tau_d=" << tu.best.tau_d
           << " tau_a=" << tu.best.tau_a << " del=" << tu.decision.deletions.size()
           << " add=" << tu.decision.additions.size();
      chosen[si] = desc.str();
      return;
    }

    if (method == Method::TNA) {
      std::uint64_t tna_seed = derive_seed(protocol.master_seed,
                                           {stage::kTuneTNA, static_cast<std::uint64_t>(s)});
      TuneTNAResult tna =
          tune_tna(graph, split, options.model, options.num_models, tna_grid, tna_seed, inner_jobs);
      TrainSet ts = augmented_train_set(graph, split, tna.augmented);
      for (int j = 0; j < protocol.n_seeds; ++j) {
        ModelConfig cfg = options.model;
        cfg.seed = eval_seed_for(protocol.master_seed, s, j);
        Matrix preds = predict(train_on(graph, ts, cfg), graph);
        report.accuracies[si][j] = accuracy(preds, graph, split.test);
      }
      std::ostringstream desc;
      desc << "tna tau_c=" << tna.best_tau_c << " added=" << tna.augmented.entries.size();
      chosen[si] = desc.str();
      return;
    }

    // SEG: tune both enhancements, then pick per evaluation seed among the
    // three configurations by validation accuracy.
    ModelConfig tune_cfg = options.model;
    tune_cfg.seed = derive_seed(protocol.master_seed,
                                {stage::kTuneTU, static_cast<std::uint64_t>(s)});
    TuneTUResult tu = tune_tu(graph, split, tune_cfg, options.tu_mode, tu_grid, inner_jobs);
    std::uint64_t tna_seed = derive_seed(protocol.master_seed,
                                         {stage::kTuneTNA, static_cast<std::uint64_t>(s)});
    TuneTNAResult tna =
        tune_tna(graph, split, options.model, options.num_models, tna_grid, tna_seed, inner_jobs);
    AugmentedTrainSet joint = joint_augment(
        tu.updated, split, options.model, options.num_models, tna.best_tau_c,
        derive_seed(protocol.master_seed, {stage::kJointTNA, static_cast<std::uint64_t>(s)}));
    std::string chosen_desc;
    for (int j = 0; j < protocol.n_seeds; ++j) {
      auto result = seg_pipeline(graph, split, options.model, tu, tna, joint,
                                 eval_seed_for(protocol.master_seed, s, j));
      report.accuracies[si][j] = result.test_accuracy;
      if (j == 0) chosen_desc = result.chosen;
    }
    std::ostringstream desc;
    desc << "seg(" << chosen_desc << ") tau_d=" << tu.best.tau_d << " tau_a=" << tu.best.tau_a
         << " tau_c=" << tna.best_tau_c;
    chosen[si] = desc.str();
  });

  report.recompute();
  std::ostringstream all;
  for (int s = 0; s < protocol.n_splits; ++s) {
    if (s) all << "; ";
    all << "split" << s << ": " << chosen[s];
  }
  report.chosen_config = all.str();
  return report;
}

std::vector<SweepRow> noise_accuracy_sweep(const Graph& graph, PerturbMode mode,
                                           const std::vector<double>& fractions,
                                           const ProtocolConfig& protocol,
                                           const ProtocolOptions& options) {
  if (fractions.empty()) throw ConfigError("noise_accuracy_sweep: no fractions given");
  NoiseReport base = noise_ratio(graph);
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    if (f < 0.0 || f > 1.0) throw ConfigError("noise_accuracy_sweep: fraction outside [0,1]");
    std::int64_t pool = mode == PerturbMode::DeleteInter ? base.num_inter : base.num_edges;
    auto count = static_cast<std::int64_t>(std::llround(f * static_cast<double>(pool)));
    Graph perturbed = count == 0 ? graph
                                 : perturb_with_ground_truth(graph, mode, count,
                                                             protocol.master_seed);
    RunReport report = run_protocol(perturbed, Method::Baseline, protocol, options);
    rows.push_back({noise_ratio(perturbed).noise_ratio, report.mean, report.std_over_runs});
  }
  return rows;
}

std::vector<SweepRow> trainsize_accuracy_sweep(const Graph& graph, const std::vector<int>& sizes,
                                               const ProtocolConfig& protocol,
                                               const ProtocolOptions& options) {
  if (sizes.empty()) throw ConfigError("trainsize_accuracy_sweep: no sizes given");
  std::vector<SweepRow> rows;
  for (int size : sizes) {
    ProtocolConfig cfg = protocol;
    cfg.n_train_per_class = size;
    RunReport report = run_protocol(graph, Method::Baseline, cfg, options);
    rows.push_back({static_cast<double>(size), report.mean, report.std_over_runs});
  }
  return rows;
}

std::vector<ReliabilityBin> reliability_curve(const Matrix& preds, const std::vector<int>& labels,
                                              int num_bins) {
  if (num_bins < 1) throw ConfigError("reliability_curve: num_bins must be >= 1");
  if (static_cast<std::int64_t>(labels.size()) != preds.rows())
    throw ConfigError("reliability_curve: labels/preds size mismatch");
  const double lo = 1.0 / static_cast<double>(preds.cols());
  const double width = (1.0 - lo) / num_bins;
  std::vector<ReliabilityBin> bins(num_bins);
  for (int b = 0; b < num_bins; ++b) {
    bins[b].lo = lo + b * width;
    bins[b].hi = lo + (b + 1) * width;
  }
  auto cl = confidence_and_label(preds);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<std::int64_t> correct(num_bins, 0);
  for (std::size_t v = 0; v < labels.size(); ++v) {
    double confidence = std::clamp(cl[v].confidence, lo, 1.0);
    int b = std::min(num_bins - 1, static_cast<int>((confidence - lo) / width));
    bins[b].count++;
    conf_sum[b] += confidence;
    if (cl[v].label == labels[v]) correct[b]++;
  }
  for (int b = 0; b < num_bins; ++b) {
    if (bins[b].count > 0) {
      bins[b].mean_confidence = conf_sum[b] / static_cast<double>(bins[b].count);
      bins[b].accuracy = static_cast<double>(correct[b]) / static_cast<double>(bins[b].count);
    }
  }
  return bins;
}

std::vector<CorrelationBin> correlation_samelabel_curve(const Matrix& preds,
                                                        const std::vector<int>& labels,
                                                        std::int64_t pair_sample, int num_bins,
                                                        std::uint64_t seed) {
  if (num_bins < 1) throw ConfigError("correlation curve: num_bins must be >= 1");
  if (pair_sample < 1) throw ConfigError("correlation curve: pair_sample must be >= 1");
  const auto n = preds.rows();
  if (n < 2) throw ConfigError("correlation curve: need at least 2 nodes");
  if (static_cast<std::int64_t>(labels.size()) != n)
    throw ConfigError("correlation curve: labels/preds size mismatch");

  const double width = 1.0 / num_bins;
  std::vector<CorrelationBin> bins(num_bins);
  for (int b = 0; b < num_bins; ++b) {
    bins[b].lo = b * width;
    bins[b].hi = (b + 1) * width;
  }
  std::vector<double> corr_sum(num_bins, 0.0);
  std::vector<std::int64_t> same(num_bins, 0);
  Rng rng(derive_seed(seed, {0xc0bb}));
  for (std::int64_t i = 0; i < pair_sample; ++i) {
    auto u = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    auto v = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n - 1)));
    if (v >= u) ++v;
    double corr = std::clamp(label_correlation(preds, u, v), 0.0, 1.0);
    int b = std::min(num_bins - 1, static_cast<int>(corr / width));
    bins[b].count++;
    corr_sum[b] += corr;
    if (labels[u] == labels[v]) same[b]++;
  }
  for (int b = 0; b < num_bins; ++b) {
    if (bins[b].count > 0) {
      bins[b].mean_correlation = corr_sum[b] / static_cast<double>(bins[b].count);
      bins[b].same_label_fraction =
          static_cast<double>(same[b]) / static_cast<double>(bins[b].count);
    }
  }
  return bins;
}

}  // namespace seg
