#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seg/graph.hpp"
#include "seg/split.hpp"

namespace seg {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class ModelKind { SGC, GCN };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::SGC;
  int hidden_dim = 16;       // GCN only
  int hops = 2;              // SGC only
  double dropout = 0.5;      // GCN only
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int epochs = 400;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Explicit training set: node indices with the labels to fit (may be
/// pseudo-labels that differ from the graph's ground truth).
struct TrainSet {
  std::vector<std::int32_t> nodes;
  std::vector<int> labels;
};

struct TrainedModel {
  ModelConfig config;
  // SGC: weights = {W (d x c)}, biases = {b (c)}.
  // GCN: weights = {W1 (d x h), W2 (h x c)}, biases = {b1 (h), b2 (c)}.
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  // Propagated features cached for the training graph (SGC only).
  std::optional<Matrix> cached_propagation;
  std::uint64_t cached_graph_uid = 0;
};

/// Symmetric normalization with self-loops: D^(-1/2) (A + I) D^(-1/2).
/// Stored self-loop edges are ignored here; the +I term covers them.
SparseMatrix normalized_adjacency(const Graph& graph);

/// Full-batch Adam on mean cross-entropy over the train set plus
/// weight_decay * L2 of the weight matrices (biases unregularized).
/// Deterministic given config.seed.
TrainedModel train_on(const Graph& graph, const TrainSet& train_set, const ModelConfig& config);
TrainedModel train(const Graph& graph, const Split& split, const ModelConfig& config);

/// Row-stochastic class distributions (softmax over logits, dropout off).
Matrix predict(const TrainedModel& model, const Graph& graph);

struct NodePrediction {
  double confidence = 0.0;  // row max
  int label = 0;            // argmax, ties broken by lowest class index
};

std::vector<NodePrediction> confidence_and_label(const Matrix& preds);

/// Fraction of `nodes` whose argmax prediction equals the graph label.
double accuracy(const Matrix& preds, const Graph& graph, const std::vector<std::int32_t>& nodes);

/// Max relative error between analytic gradients and central finite
/// differences at the initialization point (dropout forced off).
double gradient_check(const Graph& graph, const Split& split, const ModelConfig& config,
                      double epsilon);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace seg
