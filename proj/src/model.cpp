#include "seg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr std::uint64_t kInitStream = 0x01;
constexpr std::uint64_t kDropoutStream = 0x02;

struct Params {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

Params glorot_init(const ModelConfig& config, int feature_dim, int num_classes) {
  Rng rng(derive_seed(config.seed, {kInitStream}));
  auto glorot = [&rng](int rows, int cols) {
    Matrix w(rows, cols);
    double limit = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return w;
  };
  Params p;
  if (config.kind == ModelKind::SGC) {
    p.weights.push_back(glorot(feature_dim, num_classes));
    p.biases.push_back(Vector::Zero(num_classes));
  } else {
    p.weights.push_back(glorot(feature_dim, config.hidden_dim));
    p.weights.push_back(glorot(config.hidden_dim, num_classes));
    p.biases.push_back(Vector::Zero(config.hidden_dim));
    p.biases.push_back(Vector::Zero(num_classes));
  }
  return p;
}

Matrix propagate(const SparseMatrix& adj, const Matrix& x, int hops) {
  Matrix out = x;
  for (int h = 0; h < hops; ++h) out = adj * out;
  return out;
}

/// Softmax of the logit rows listed in `nodes`; writes (softmax - onehot)/|T|
/// into grad rows and accumulates mean cross-entropy.
double softmax_loss_rows(const Matrix& logits, const std::vector<std::int32_t>& nodes,
                         const std::vector<int>& labels, Matrix* grad) {
  const double inv_count = 1.0 / static_cast<double>(nodes.size());
  double loss = 0.0;
  Eigen::RowVectorXd row;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto v = nodes[i];
    row = logits.row(v);
    double mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    double denom = row.sum();
    row /= denom;
    loss -= std::log(std::max(row(labels[i]), 1e-300)) * inv_count;
    if (grad) {
      grad->row(v) = row * inv_count;
      (*grad)(v, labels[i]) -= inv_count;
    }
  }
  return loss;
}

double l2_penalty(const Params& p, double weight_decay) {
  double sq = 0.0;
  for (const auto& w : p.weights) sq += w.squaredNorm();
  return 0.5 * weight_decay * sq;
}

/// Inputs shared by all loss evaluations of one training run.
struct Workspace {
  SparseMatrix adj;          // normalized adjacency (GCN)
  Matrix inputs;             // SGC: propagated features at train rows; GCN: adj * X
  Matrix full_propagation;   // SGC: propagated features for every node
  std::vector<std::int32_t> rows;  // row index of each train node in `inputs` space
  std::vector<int> labels;         // train labels, aligned with rows
  std::int64_t num_nodes = 0;
};

/// Loss and (optionally) gradients. `mask` is the dropout keep-mask already
/// scaled by 1/(1-rate); pass nullptr for inference-mode evaluation.
double gcn_loss(const Workspace& ws, const Params& p, double weight_decay, const Matrix* mask,
                Params* grads) {
  const auto& ax = ws.inputs;
  Matrix z1 = ax * p.weights[0];
  z1.rowwise() += p.biases[0].transpose();
  Matrix h = z1.cwiseMax(0.0);
  if (mask) h = h.cwiseProduct(*mask);
  Matrix ah = ws.adj * h;
  Matrix z2 = ah * p.weights[1];
  z2.rowwise() += p.biases[1].transpose();

  Matrix g2;
  if (grads) g2 = Matrix::Zero(z2.rows(), z2.cols());
  double loss =
      softmax_loss_rows(z2, ws.rows, ws.labels, grads ? &g2 : nullptr) + l2_penalty(p, weight_decay);
  if (!grads) return loss;

  grads->weights.resize(2);
  grads->biases.resize(2);
  grads->weights[1] = ah.transpose() * g2 + weight_decay * p.weights[1];
  grads->biases[1] = g2.colwise().sum();
  Matrix gh = ws.adj * g2 * p.weights[1].transpose();
  if (mask) gh = gh.cwiseProduct(*mask);
  Matrix gz1 = ((z1.array() > 0.0).cast<double>() * gh.array()).matrix();
  grads->weights[0] = ax.transpose() * gz1 + weight_decay * p.weights[0];
  grads->biases[0] = gz1.colwise().sum();
  return loss;
}

double sgc_loss(const Workspace& ws, const Params& p, double weight_decay, Params* grads) {
  Matrix logits = ws.inputs * p.weights[0];
  logits.rowwise() += p.biases[0].transpose();
  Matrix g;
  if (grads) g = Matrix::Zero(logits.rows(), logits.cols());
  double loss =
      softmax_loss_rows(logits, ws.rows, ws.labels, grads ? &g : nullptr) + l2_penalty(p, weight_decay);
  if (!grads) return loss;
  grads->weights.resize(1);
  grads->biases.resize(1);
  grads->weights[0] = ws.inputs.transpose() * g + weight_decay * p.weights[0];
  grads->biases[0] = g.colwise().sum();
  return loss;
}

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  int t = 0;

  explicit AdamState(const Params& p) {
    for (const auto& w : p.weights) {
      mw.push_back(Matrix::Zero(w.rows(), w.cols()));
      vw.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
      mb.push_back(Vector::Zero(b.size()));
      vb.push_back(Vector::Zero(b.size()));
    }
  }

  void step(Params& p, const Params& g, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      mw[i] = kAdamBeta1 * mw[i] + (1.0 - kAdamBeta1) * g.weights[i];
      vw[i] = kAdamBeta2 * vw[i] + (1.0 - kAdamBeta2) * g.weights[i].cwiseProduct(g.weights[i]);
      p.weights[i].array() -=
          lr * (mw[i].array() / c1) / ((vw[i].array() / c2).sqrt() + kAdamEps);
    }
    for (std::size_t i = 0; i < p.biases.size(); ++i) {
      mb[i] = kAdamBeta1 * mb[i] + (1.0 - kAdamBeta1) * g.biases[i];
      vb[i] = kAdamBeta2 * vb[i] + (1.0 - kAdamBeta2) * g.biases[i].cwiseProduct(g.biases[i]);
      p.biases[i].array() -= lr * (mb[i].array() / c1) / ((vb[i].array() / c2).sqrt() + kAdamEps);
    }
  }
};

void validate_train_set(const Graph& graph, const TrainSet& ts) {
  if (ts.nodes.empty()) throw ConfigError("train set is empty");
  if (ts.nodes.size() != ts.labels.size())
    throw ConfigError("train set nodes/labels size mismatch");
  std::unordered_set<std::int32_t> seen;
  for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
    if (ts.nodes[i] < 0 || ts.nodes[i] >= graph.num_nodes())
      throw ConfigError("train node " + std::to_string(ts.nodes[i]) + " out of range");
    if (!seen.insert(ts.nodes[i]).second)
      throw ConfigError("duplicate train node " + std::to_string(ts.nodes[i]));
    if (ts.labels[i] < 0 || ts.labels[i] >= graph.num_classes())
      throw ConfigError("train label " + std::to_string(ts.labels[i]) + " out of range");
  }
}

Workspace make_workspace(const Graph& graph, const TrainSet& ts, const ModelConfig& config) {
  Workspace ws;
  ws.num_nodes = graph.num_nodes();
  ws.labels = ts.labels;
  ws.adj = normalized_adjacency(graph);
  if (config.kind == ModelKind::SGC) {
    // Only the train rows of the propagated features enter the loss.
    ws.full_propagation = propagate(ws.adj, graph.features(), config.hops);
    Matrix sub(static_cast<std::int64_t>(ts.nodes.size()), ws.full_propagation.cols());
    ws.rows.resize(ts.nodes.size());
    for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
      sub.row(static_cast<std::int64_t>(i)) = ws.full_propagation.row(ts.nodes[i]);
      ws.rows[i] = static_cast<std::int32_t>(i);
    }
    ws.inputs = std::move(sub);
  } else {
    ws.inputs = ws.adj * graph.features();
    ws.rows = ts.nodes;
  }
  return ws;
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "sgc" || name == "SGC") return ModelKind::SGC;
  if (name == "gcn" || name == "GCN") return ModelKind::GCN;
  throw ConfigError("unknown model kind: " + name);
}

std::string to_string(ModelKind kind) { return kind == ModelKind::SGC ? "sgc" : "gcn"; }

void ModelConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (hops < 1) throw ConfigError("hops must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
}

SparseMatrix normalized_adjacency(const Graph& graph) {
  const std::int64_t n = graph.num_nodes();
  std::vector<double> degree(static_cast<std::size_t>(n), 1.0);  // +I self-loop
  for (const auto& e : graph.edges()) {
    if (e.u == e.v) continue;
    degree[e.u] += 1.0;
    degree[e.v] += 1.0;
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(degree[v]);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.edges().size() * 2 + static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v)
    triplets.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
  for (const auto& e : graph.edges()) {
    if (e.u == e.v) continue;
    double w = inv_sqrt[e.u] * inv_sqrt[e.v];
    triplets.emplace_back(e.u, e.v, w);
    triplets.emplace_back(e.v, e.u, w);
  }
  SparseMatrix adj(n, n);
  adj.setFromTriplets(triplets.begin(), triplets.end());
  return adj;
}

TrainedModel train_on(const Graph& graph, const TrainSet& train_set, const ModelConfig& config) {
  config.validate();
  validate_train_set(graph, train_set);

  Workspace ws = make_workspace(graph, train_set, config);
  Params params = glorot_init(config, graph.feature_dim(), graph.num_classes());
  AdamState adam(params);
  Rng dropout_rng(derive_seed(config.seed, {kDropoutStream}));
  const bool use_dropout = config.kind == ModelKind::GCN && config.dropout > 0.0;
  Matrix mask;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Params grads;
    double loss;
    if (config.kind == ModelKind::SGC) {
      loss = sgc_loss(ws, params, config.weight_decay, &grads);
    } else {
      const Matrix* mask_ptr = nullptr;
      if (use_dropout) {
        const double keep = 1.0 - config.dropout;
        mask.resize(ws.num_nodes, config.hidden_dim);
        for (std::int64_t i = 0; i < mask.rows(); ++i)
          for (int j = 0; j < mask.cols(); ++j)
            mask(i, j) = dropout_rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        mask_ptr = &mask;
      }
      loss = gcn_loss(ws, params, config.weight_decay, mask_ptr, &grads);
    }
    if (!std::isfinite(loss))
      throw DataError("non-finite training loss at epoch " + std::to_string(epoch));
    adam.step(params, grads, config.learning_rate);
  }

  TrainedModel model;
  model.config = config;
  model.weights = std::move(params.weights);
  model.biases = std::move(params.biases);
  if (config.kind == ModelKind::SGC) {
    model.cached_propagation = std::move(ws.full_propagation);
    model.cached_graph_uid = graph.uid();
  }
  return model;
}

TrainedModel train(const Graph& graph, const Split& split, const ModelConfig& config) {
  TrainSet ts;
  ts.nodes = split.train;
  ts.labels.reserve(split.train.size());
  for (auto v : split.train) {
    if (v < 0 || v >= graph.num_nodes())
      throw ConfigError("train node " + std::to_string(v) + " out of range");
    ts.labels.push_back(graph.labels()[v]);
  }
  return train_on(graph, ts, config);
}

Matrix predict(const TrainedModel& model, const Graph& graph) {
  const auto& config = model.config;
  if (graph.feature_dim() != model.weights[0].rows())
    throw ConfigError("graph feature_dim " + std::to_string(graph.feature_dim()) +
                      " does not match model input dim " +
                      std::to_string(model.weights[0].rows()));

  Matrix logits;
  if (config.kind == ModelKind::SGC) {
    if (model.cached_propagation && model.cached_graph_uid == graph.uid()) {
      logits = *model.cached_propagation * model.weights[0];
    } else {
      SparseMatrix adj = normalized_adjacency(graph);
      logits = propagate(adj, graph.features(), config.hops) * model.weights[0];
    }
    logits.rowwise() += model.biases[0].transpose();
  } else {
    SparseMatrix adj = normalized_adjacency(graph);
    Matrix z1 = (adj * graph.features()) * model.weights[0];
    z1.rowwise() += model.biases[0].transpose();
    Matrix h = z1.cwiseMax(0.0);
    logits = (adj * h) * model.weights[1];
    logits.rowwise() += model.biases[1].transpose();
  }

  for (std::int64_t v = 0; v < logits.rows(); ++v) {
    double mx = logits.row(v).maxCoeff();
    logits.row(v) = (logits.row(v).array() - mx).exp();
    logits.row(v) /= logits.row(v).sum();
  }
  return logits;
}

std::vector<NodePrediction> confidence_and_label(const Matrix& preds) {
  std::vector<NodePrediction> out(static_cast<std::size_t>(preds.rows()));
  for (std::int64_t v = 0; v < preds.rows(); ++v) {
    double best = preds(v, 0);
    int arg = 0;
    for (int k = 1; k < preds.cols(); ++k) {
      if (preds(v, k) > best) {
        best = preds(v, k);
        arg = k;
      }
    }
    out[v] = {best, arg};
  }
  return out;
}

double accuracy(const Matrix& preds, const Graph& graph,
                const std::vector<std::int32_t>& nodes) {
  if (nodes.empty()) return 0.0;
  auto cl = confidence_and_label(preds);
  std::int64_t correct = 0;
  for (auto v : nodes)
    if (cl[v].label == graph.labels()[v]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double gradient_check(const Graph& graph, const Split& split, const ModelConfig& config,
                      double epsilon) {
  ModelConfig cfg = config;
  cfg.dropout = 0.0;
  cfg.validate();

  TrainSet ts;
  ts.nodes = split.train;
  for (auto v : split.train) ts.labels.push_back(graph.labels()[v]);
  validate_train_set(graph, ts);

  Workspace ws = make_workspace(graph, ts, cfg);
  Params params = glorot_init(cfg, graph.feature_dim(), graph.num_classes());
  auto loss_at = [&](const Params& p) {
    return cfg.kind == ModelKind::SGC ? sgc_loss(ws, p, cfg.weight_decay, nullptr)
                                      : gcn_loss(ws, p, cfg.weight_decay, nullptr, nullptr);
  };
  Params grads;
  if (cfg.kind == ModelKind::SGC)
    sgc_loss(ws, params, cfg.weight_decay, &grads);
  else
    gcn_loss(ws, params, cfg.weight_decay, nullptr, &grads);

  double max_rel = 0.0;
  auto check_entry = [&](double& entry, double analytic) {
    const double saved = entry;
    entry = saved + epsilon;
    double up = loss_at(params);
    entry = saved - epsilon;
    double down = loss_at(params);
    entry = saved;
    double fd = (up - down) / (2.0 * epsilon);
    double rel = std::abs(analytic - fd) / std::max(1e-8, std::abs(analytic) + std::abs(fd));
    max_rel = std::max(max_rel, rel);
  };
  for (std::size_t i = 0; i < params.weights.size(); ++i)
    for (std::int64_t r = 0; r < params.weights[i].rows(); ++r)
      for (std::int64_t c = 0; c < params.weights[i].cols(); ++c)
        check_entry(params.weights[i](r, c), grads.weights[i](r, c));
  for (std::size_t i = 0; i < params.biases.size(); ++i)
    for (std::int64_t r = 0; r < params.biases[i].size(); ++r)
      check_entry(params.biases[i](r), grads.biases[i](r));
  return max_rel;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["config"] = {{"kind", to_string(model.config.kind)},
                   {"hidden_dim", model.config.hidden_dim},
                   {"hops", model.config.hops},
                   {"dropout", model.config.dropout},
                   {"learning_rate", model.config.learning_rate},
                   {"weight_decay", model.config.weight_decay},
                   {"epochs", model.config.epochs},
                   {"seed", model.config.seed}};
  auto& weights = doc["weights"] = nlohmann::json::array();
  for (const auto& w : model.weights) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::int64_t r = 0; r < w.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::int64_t c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  auto& biases = doc["biases"] = nlohmann::json::array();
  for (const auto& b : model.biases) {
    nlohmann::json vec = nlohmann::json::array();
    for (std::int64_t r = 0; r < b.size(); ++r) vec.push_back(b(r));
    biases.push_back(std::move(vec));
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << doc.dump() << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  TrainedModel model;
  const auto& cfg = doc.at("config");
  model.config.kind = model_kind_from_string(cfg.at("kind").get<std::string>());
  model.config.hidden_dim = cfg.at("hidden_dim").get<int>();
  model.config.hops = cfg.at("hops").get<int>();
  model.config.dropout = cfg.at("dropout").get<double>();
  model.config.learning_rate = cfg.at("learning_rate").get<double>();
  model.config.weight_decay = cfg.at("weight_decay").get<double>();
  model.config.epochs = cfg.at("epochs").get<int>();
  model.config.seed = cfg.at("seed").get<std::uint64_t>();
  for (const auto& rows : doc.at("weights")) {
    Matrix w(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) w(r, c) = rows[r][c].get<double>();
    model.weights.push_back(std::move(w));
  }
  for (const auto& vec : doc.at("biases")) {
    Vector b(vec.size());
    for (std::size_t r = 0; r < vec.size(); ++r) b(r) = vec[r].get<double>();
    model.biases.push_back(std::move(b));
  }
  return model;
}

}  // namespace seg
