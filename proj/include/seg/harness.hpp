#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seg/augment.hpp"
#include "seg/graph.hpp"
#include "seg/model.hpp"
#include "seg/split.hpp"
#include "seg/topology.hpp"

namespace seg {

struct ProtocolConfig {
  int n_train_per_class = 20;
  int n_val_per_class = 30;
  int n_splits = 10;
  int n_seeds = 10;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// Per-class stratified train/val/test splits, deterministic per
/// (master_seed, split index).
std::vector<Split> make_splits(const Graph& graph, const ProtocolConfig& protocol);

/// Fraction of the remaining classification error removed: (new-base)/(1-base).
double error_reduction(double base_acc, double new_acc);

enum class Method { Baseline, TU, TNA, SEG };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

struct ProtocolOptions {
  ModelConfig model;                 // model.seed is ignored; seeds are derived
  TUMode tu_mode = TUMode::Delete;
  std::vector<TUThresholds> tu_grid;  // empty -> default_tu_grid(tu_mode)
  std::vector<double> tna_grid;       // empty -> default_tna_grid()
  int num_models = 2;                 // ensemble size L for TNA
  int jobs = 1;
};

struct RunReport {
  std::vector<std::vector<double>> accuracies;  // [split][seed]
  double mean = 0.0;
  double std_over_runs = 0.0;         // sample std over all split x seed cells
  double std_over_split_means = 0.0;  // sample std over the per-split means
  std::string chosen_config;          // per-split tuned configuration summary
  double error_reduction_vs_baseline = 0.0;  // filled by callers with a baseline

  /// Recomputes the aggregate fields from the raw accuracy grid.
  void recompute();
};

/// Runs the split protocol for one method: per split, tune on validation,
/// then train/evaluate once per model seed. The accuracy grid is a pure
/// function of (graph, config, master_seed), and all methods share the same
/// splits and evaluation seeds for paired comparison.
RunReport run_protocol(const Graph& graph, Method method, const ProtocolConfig& protocol,
                       const ProtocolOptions& options);

struct SegPipelineResult {
  double test_accuracy = 0.0;
  std::string chosen;  // "tu", "tna" or "both"
  double val_tu = 0.0;
  double val_tna = 0.0;
  double val_both = 0.0;
};

/// Pseudo-label set for the joint configuration: the TNA flow rerun on the
/// TU-updated graph with the already-tuned threshold.
AugmentedTrainSet joint_augment(const Graph& updated, const Split& split,
                                const ModelConfig& base_config, int num_models, double tau_c,
                                std::uint64_t seed);

/// Scores the three configurations (TU only, TNA only, TU then TNA) on the
/// validation set and returns the test accuracy of the winner. Ties prefer
/// TU-only, then TNA-only, then the joint configuration.
SegPipelineResult seg_pipeline(const Graph& graph, const Split& split,
                               const ModelConfig& base_config, const TuneTUResult& tu_best,
                               const TuneTNAResult& tna_best, const AugmentedTrainSet& joint_aug,
                               std::uint64_t eval_seed);

/// Convenience overload computing the joint augmentation internally.
SegPipelineResult seg_pipeline(const Graph& graph, const Split& split,
                               const ModelConfig& base_config, const TuneTUResult& tu_best,
                               const TuneTNAResult& tna_best, int num_models,
                               std::uint64_t eval_seed);

struct SweepRow {
  double x = 0.0;      // noise ratio or train-set size
  double mean = 0.0;
  double std = 0.0;
};

/// Ground-truth perturbation sweep: for each fraction, delete that share of
/// the inter-class edges (or add fraction*m intra-class edges) and rerun the
/// baseline protocol. Rows report the resulting noise ratio.
std::vector<SweepRow> noise_accuracy_sweep(const Graph& graph, PerturbMode mode,
                                           const std::vector<double>& fractions,
                                           const ProtocolConfig& protocol,
                                           const ProtocolOptions& options);

/// Baseline protocol rerun for each train-set size (nodes per class).
std::vector<SweepRow> trainsize_accuracy_sweep(const Graph& graph, const std::vector<int>& sizes,
                                               const ProtocolConfig& protocol,
                                               const ProtocolOptions& options);

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  std::int64_t count = 0;
};

/// Nodes bucketed by confidence into equal-width bins over [1/c, 1];
/// per-bin accuracy of the argmax label.
std::vector<ReliabilityBin> reliability_curve(const Matrix& preds, const std::vector<int>& labels,
                                              int num_bins);

struct CorrelationBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean_correlation = 0.0;
  double same_label_fraction = 0.0;
  std::int64_t count = 0;
};

/// Uniformly sampled node pairs bucketed by label correlation over [0, 1];
/// per-bin fraction of pairs sharing the ground-truth label.
std::vector<CorrelationBin> correlation_samelabel_curve(const Matrix& preds,
                                                        const std::vector<int>& labels,
                                                        std::int64_t pair_sample, int num_bins,
                                                        std::uint64_t seed);

}  // namespace seg
