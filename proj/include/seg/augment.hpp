#pragma once

#include <cstdint>
#include <vector>

#include "seg/graph.hpp"
#include "seg/model.hpp"
#include "seg/split.hpp"

namespace seg {

struct AugmentedEntry {
  std::int32_t node = 0;
  int pseudo_label = 0;
  double min_confidence = 0.0;  // minimum over the contributing models
};

/// Pseudo-labeled nodes outside the visible set, labels unanimous across all
/// contributing models.
struct AugmentedTrainSet {
  std::vector<AugmentedEntry> entries;
};

/// Random re-partitions of the visible set T ∪ S: each of the L outputs draws
/// |T| train nodes, the remainder becomes validation; the test set is shared.
std::vector<Split> swap_train_val(const Split& split, int num_models, std::uint64_t seed);

/// Algorithm: a node enters when every model is confident (c_v >= tau_c),
/// all models agree on the label, and the node is outside T ∪ S.
AugmentedTrainSet augment(const std::vector<Matrix>& preds, const Split& split, double tau_c);

/// Equalizes per-class counts at the minimum class count, keeping the
/// highest-confidence entries (ties broken by lower node id).
AugmentedTrainSet class_balance(const AugmentedTrainSet& aug, int num_classes);

struct TuneTNAResult {
  double best_tau_c = 2.0;
  double val_accuracy = 0.0;
  AugmentedTrainSet augmented;  // entries selected by the winning threshold
  struct GridPoint {
    double tau_c = 0.0;
    double val_accuracy = 0.0;
    std::int64_t num_added = 0;
  };
  std::vector<GridPoint> grid;
};

/// Trains L models on swapped splits, then for each tau_c augments, balances,
/// retrains on the original T plus the pseudo-labeled entries and scores on
/// the original validation set. First grid point wins ties. The grid must
/// include a rejection value (tau_c > 1).
TuneTNAResult tune_tna(const Graph& graph, const Split& split, const ModelConfig& base_config,
                       int num_models, const std::vector<double>& tau_grid, std::uint64_t seed,
                       int jobs = 1);

/// {1.01 (reject), 0.99, 0.95, 0.9, 0.8, 0.7, 0.6}
std::vector<double> default_tna_grid();

/// Train set combining the split's train nodes (ground-truth labels) with the
/// augmented entries (pseudo-labels).
TrainSet augmented_train_set(const Graph& graph, const Split& split,
                             const AugmentedTrainSet& aug);

}  // namespace seg
