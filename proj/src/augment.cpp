#include "seg/augment.hpp"

#include <algorithm>
#include <unordered_set>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

void Split::validate(std::int64_t num_nodes) const {
  std::unordered_set<std::int32_t> seen;
  auto check = [&](const std::vector<std::int32_t>& set, const char* name) {
    for (auto v : set) {
      if (v < 0 || v >= num_nodes)
        throw ConfigError(std::string(name) + " node " + std::to_string(v) + " out of range");
      if (!seen.insert(v).second)
        throw ConfigError("node " + std::to_string(v) + " appears in more than one split set");
    }
  };
  check(train, "train");
  check(val, "val");
  check(test, "test");
}

std::vector<Split> swap_train_val(const Split& split, int num_models, std::uint64_t seed) {
  if (num_models < 1) throw ConfigError("swap_train_val: num_models must be >= 1");
  std::vector<std::int32_t> visible;
  visible.reserve(split.train.size() + split.val.size());
  visible.insert(visible.end(), split.train.begin(), split.train.end());
  visible.insert(visible.end(), split.val.begin(), split.val.end());
  std::sort(visible.begin(), visible.end());
  if (visible.size() < split.train.size() + 1)
    throw ConfigError("swap_train_val: visible set must exceed the train set size");

  std::vector<Split> out;
  out.reserve(num_models);
  for (int l = 0; l < num_models; ++l) {
    Rng rng(derive_seed(seed, {stage::kSwapSplit, static_cast<std::uint64_t>(l)}));
    std::vector<std::int32_t> pool = visible;
    rng.shuffle(pool);
    Split s;
    s.train.assign(pool.begin(), pool.begin() + split.train.size());
    s.val.assign(pool.begin() + split.train.size(), pool.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    s.test = split.test;
    out.push_back(std::move(s));
  }
  return out;
}

AugmentedTrainSet augment(const std::vector<Matrix>& preds, const Split& split, double tau_c) {
  if (preds.empty()) throw ConfigError("augment: need at least one prediction matrix");
  const std::int64_t n = preds[0].rows();
  const std::int64_t c = preds[0].cols();
  for (const auto& p : preds)
    if (p.rows() != n || p.cols() != c)
      throw ConfigError("augment: prediction matrices disagree on shape");

  std::vector<std::vector<NodePrediction>> views;
  views.reserve(preds.size());
  for (const auto& p : preds) views.push_back(confidence_and_label(p));

  std::unordered_set<std::int32_t> visible(split.train.begin(), split.train.end());
  visible.insert(split.val.begin(), split.val.end());

  AugmentedTrainSet out;
  for (std::int64_t v = 0; v < n; ++v) {
    if (visible.count(static_cast<std::int32_t>(v))) continue;
    double min_conf = views[0][v].confidence;
    int label = views[0][v].label;
    bool keep = min_conf >= tau_c;
    for (std::size_t l = 1; keep && l < views.size(); ++l) {
      keep = views[l][v].confidence >= tau_c && views[l][v].label == label;
      min_conf = std::min(min_conf, views[l][v].confidence);
    }
    if (keep) out.entries.push_back({static_cast<std::int32_t>(v), label, min_conf});
  }
  return out;
}

AugmentedTrainSet class_balance(const AugmentedTrainSet& aug, int num_classes) {
  if (num_classes < 1) throw ConfigError("class_balance: num_classes must be >= 1");
  std::vector<std::vector<AugmentedEntry>> by_class(num_classes);
  for (const auto& e : aug.entries) {
    if (e.pseudo_label < 0 || e.pseudo_label >= num_classes)
      throw ConfigError("class_balance: pseudo label out of range");
    by_class[e.pseudo_label].push_back(e);
  }
  std::size_t keep = by_class.empty() ? 0 : by_class[0].size();
  for (const auto& cls : by_class) keep = std::min(keep, cls.size());

  AugmentedTrainSet out;
  for (auto& cls : by_class) {
    std::sort(cls.begin(), cls.end(), [](const AugmentedEntry& a, const AugmentedEntry& b) {
      if (a.min_confidence != b.min_confidence) return a.min_confidence > b.min_confidence;
      return a.node < b.node;
    });
    out.entries.insert(out.entries.end(), cls.begin(), cls.begin() + keep);
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const AugmentedEntry& a, const AugmentedEntry& b) { return a.node < b.node; });
  return out;
}

TrainSet augmented_train_set(const Graph& graph, const Split& split,
                             const AugmentedTrainSet& aug) {
  TrainSet ts;
  ts.nodes = split.train;
  for (auto v : split.train) ts.labels.push_back(graph.labels()[v]);
  for (const auto& e : aug.entries) {
    ts.nodes.push_back(e.node);
    ts.labels.push_back(e.pseudo_label);
  }
  return ts;
}

TuneTNAResult tune_tna(const Graph& graph, const Split& split, const ModelConfig& base_config,
                       int num_models, const std::vector<double>& tau_grid, std::uint64_t seed,
                       int jobs) {
  if (tau_grid.empty()) throw ConfigError("tune_tna: tau grid is empty");
  if (std::none_of(tau_grid.begin(), tau_grid.end(), [](double t) { return t > 1.0; }))
    throw ConfigError("tune_tna: grid must include a rejection value (tau_c > 1)");
  if (num_models < 1) throw ConfigError("tune_tna: need at least one model");

  auto swapped = swap_train_val(split, num_models, seed);
  std::vector<Matrix> preds(num_models);
  parallel_for(static_cast<std::size_t>(num_models), jobs, [&](std::size_t l) {
    ModelConfig cfg = base_config;
    cfg.seed = derive_seed(seed, {stage::kEnsembleModel, static_cast<std::uint64_t>(l)});
    preds[l] = predict(train(graph, swapped[l], cfg), graph);
  });

  ModelConfig final_config = base_config;
  final_config.seed = derive_seed(seed, {stage::kFinalModel});

  struct Cell {
    double val_acc = 0.0;
    AugmentedTrainSet aug;
  };
  std::vector<Cell> cells(tau_grid.size());
  parallel_for(tau_grid.size(), jobs, [&](std::size_t i) {
    AugmentedTrainSet aug = class_balance(augment(preds, split, tau_grid[i]),
                                          graph.num_classes());
    TrainedModel final_model = train_on(graph, augmented_train_set(graph, split, aug),
                                        final_config);
    cells[i] = {accuracy(predict(final_model, graph), graph, split.val), std::move(aug)};
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (cells[i].val_acc > cells[best].val_acc) best = i;

  TuneTNAResult result;
  result.best_tau_c = tau_grid[best];
  result.val_accuracy = cells[best].val_acc;
  result.augmented = std::move(cells[best].aug);
  for (std::size_t i = 0; i < tau_grid.size(); ++i)
    result.grid.push_back(
        {tau_grid[i], cells[i].val_acc, static_cast<std::int64_t>(cells[i].aug.entries.size())});
  return result;
}

std::vector<double> default_tna_grid() { return {1.01, 0.99, 0.95, 0.9, 0.8, 0.7, 0.6}; }

}  // namespace seg
