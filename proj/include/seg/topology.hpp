#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seg/graph.hpp"
#include "seg/model.hpp"
#include "seg/split.hpp"

namespace seg {

struct ScoredPair {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double correlation = 0.0;
};

/// Edge edit decision. Deletions are drawn from the original edge set,
/// additions from its complement, and the two never overlap.
struct TUDecision {
  std::vector<ScoredPair> deletions;
  std::vector<ScoredPair> additions;
};

struct TUThresholds {
  double tau_d = 0.0;          // delete candidates with correlation <= tau_d
  double tau_a = 1.0;          // add candidates with correlation >= tau_a
  double max_added_ratio = 2.0;  // committed additions capped at ratio * m
  double pool_ratio = 4.0;       // top-k sized so the candidate pool <= ratio * m
  int topk = 0;                  // candidates per node; 0 derives from pool_ratio

  /// tau_d = 0 and tau_a = 1 disable the update for softmax outputs.
  bool is_rejection() const { return tau_d == 0.0 && tau_a == 1.0; }
};

enum class TUMode { Delete, Add, Modify };

TUMode tu_mode_from_string(const std::string& name);
std::string to_string(TUMode mode);

/// Inner product of the two nodes' class distributions.
double label_correlation(const Matrix& preds, std::int64_t u, std::int64_t v);

/// Removes non-self-loop edges whose endpoint argmax labels differ and whose
/// label correlation is <= tau_d.
std::pair<Graph, TUDecision> delete_edges(const Graph& graph, const Matrix& preds,
                                          const TUThresholds& thresholds);

/// For each node, the topk non-adjacent partners with the largest label
/// correlation; exact brute-force search, pairs deduplicated. Ties broken by
/// lower partner index.
std::vector<ScoredPair> topk_addition_candidates(const Matrix& preds, const Graph& graph,
                                                 int topk);

/// Adds candidate pairs with matching argmax labels and correlation >= tau_a,
/// highest correlation first, up to max_added_ratio * m edges.
std::pair<Graph, TUDecision> add_edges(const Graph& graph, const Matrix& preds,
                                       const TUThresholds& thresholds);

/// Deletion followed by addition of at most |deletions| edges; deleted pairs
/// are never re-added.
std::pair<Graph, TUDecision> modify(const Graph& graph, const Matrix& preds,
                                    const TUThresholds& thresholds);

/// Pairwise intersection of two decisions; correlations keep the minimum.
TUDecision dual_model_intersection(const TUDecision& d1, const TUDecision& d2);

struct TuneTUResult {
  TUThresholds best;
  double val_accuracy = 0.0;
  Graph updated;       // graph produced by the winning thresholds
  TUDecision decision; // winning decision
  struct GridPoint {
    TUThresholds thresholds;
    double val_accuracy = 0.0;
    std::int64_t num_deleted = 0;
    std::int64_t num_added = 0;
  };
  std::vector<GridPoint> grid;
};

/// Trains a proposal model on the original graph, applies each grid point,
/// retrains on the updated graph and scores on the validation set; returns
/// the best grid point (first in grid order on ties). The grid must contain
/// the rejection setting so the result never falls below the baseline.
TuneTUResult tune_tu(const Graph& graph, const Split& split, const ModelConfig& base_config,
                     TUMode mode, const std::vector<TUThresholds>& grid, int jobs = 1);

/// Default grids: tau_d in {0, .05, .1, .2, .3, .5} for deletion, tau_a in
/// {1.0, .99, .95, .9, .8} for addition. Modify sweeps tau_d with additions
/// ruled by the deletion budget (no tau_a floor); the rejection setting
/// leads every grid.
std::vector<TUThresholds> default_tu_grid(TUMode mode);

}  // namespace seg
