#include "seg/topology.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

namespace {

void check_alignment(const Graph& graph, const Matrix& preds) {
  if (preds.rows() != graph.num_nodes() || preds.cols() != graph.num_classes())
    throw ConfigError("prediction matrix shape does not match graph");
}

int resolve_topk(const Graph& graph, const TUThresholds& t) {
  if (t.topk > 0) return t.topk;
  if (graph.num_nodes() <= 1) return 1;
  double per_node = t.pool_ratio * static_cast<double>(graph.num_edges()) /
                    static_cast<double>(graph.num_nodes());
  auto k = static_cast<std::int64_t>(per_node);
  return static_cast<int>(std::clamp<std::int64_t>(k, 1, graph.num_nodes() - 1));
}

bool correlation_order(const ScoredPair& a, const ScoredPair& b) {
  if (a.correlation != b.correlation) return a.correlation > b.correlation;
  if (a.u != b.u) return a.u < b.u;
  return a.v < b.v;
}

/// Equal-argmax candidates with correlation >= tau_a, best first.
std::vector<ScoredPair> addition_pool(const Graph& graph, const Matrix& preds,
                                      const TUThresholds& thresholds) {
  auto cl = confidence_and_label(preds);
  auto candidates = topk_addition_candidates(preds, graph, resolve_topk(graph, thresholds));
  std::vector<ScoredPair> pool;
  for (const auto& cand : candidates) {
    if (cl[cand.u].label != cl[cand.v].label) continue;  // Alg. 2 keep rule
    if (cand.correlation < thresholds.tau_a) continue;
    pool.push_back(cand);
  }
  std::sort(pool.begin(), pool.end(), correlation_order);
  return pool;
}

Graph apply_decision(const Graph& graph, const TUDecision& decision) {
  std::unordered_set<std::uint64_t> deleted;
  deleted.reserve(decision.deletions.size() * 2);
  for (const auto& d : decision.deletions) deleted.insert(edge_key(make_edge(d.u, d.v)));
  std::vector<Edge> edges;
  edges.reserve(graph.edges().size() - decision.deletions.size() + decision.additions.size());
  for (const auto& e : graph.edges())
    if (!deleted.count(edge_key(e))) edges.push_back(e);
  for (const auto& a : decision.additions) edges.push_back(make_edge(a.u, a.v));
  return graph.with_edges(std::move(edges));
}

}  // namespace

TUMode tu_mode_from_string(const std::string& name) {
  if (name == "delete") return TUMode::Delete;
  if (name == "add") return TUMode::Add;
  if (name == "modify") return TUMode::Modify;
  throw ConfigError("unknown topology update mode: " + name);
}

std::string to_string(TUMode mode) {
  switch (mode) {
    case TUMode::Delete: return "delete";
    case TUMode::Add: return "add";
    default: return "modify";
  }
}

double label_correlation(const Matrix& preds, std::int64_t u, std::int64_t v) {
  return preds.row(u).dot(preds.row(v));
}

std::pair<Graph, TUDecision> delete_edges(const Graph& graph, const Matrix& preds,
                                          const TUThresholds& thresholds) {
  check_alignment(graph, preds);
  auto cl = confidence_and_label(preds);
  TUDecision decision;
  for (const auto& e : graph.edges()) {
    if (e.u == e.v) continue;  // self-loops are kept untouched
    if (cl[e.u].label == cl[e.v].label) continue;
    double corr = label_correlation(preds, e.u, e.v);
    if (corr <= thresholds.tau_d) decision.deletions.push_back({e.u, e.v, corr});
  }
  return {apply_decision(graph, decision), std::move(decision)};
}

std::vector<ScoredPair> topk_addition_candidates(const Matrix& preds, const Graph& graph,
                                                 int topk) {
  check_alignment(graph, preds);
  if (topk < 1) throw ConfigError("topk must be >= 1");
  const std::int64_t n = graph.num_nodes();

  // Exact search: score all pairs, keep the k best per node. `better` acts as
  // the heap's ordering so the front holds the worst kept candidate.
  auto better = [](const std::pair<double, std::uint32_t>& a,
                   const std::pair<double, std::uint32_t>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::unordered_set<std::uint64_t> picked;
  std::vector<ScoredPair> out;
  std::vector<std::pair<double, std::uint32_t>> heap;
  for (std::int64_t u = 0; u < n; ++u) {
    heap.clear();
    for (std::int64_t v = 0; v < n; ++v) {
      if (v == u || graph.has_edge(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)))
        continue;
      double corr = label_correlation(preds, u, v);
      std::pair<double, std::uint32_t> item{corr, static_cast<std::uint32_t>(v)};
      if (static_cast<int>(heap.size()) < topk) {
        heap.push_back(item);
        std::push_heap(heap.begin(), heap.end(), better);
      } else if (better(item, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = item;
        std::push_heap(heap.begin(), heap.end(), better);
      }
    }
    for (const auto& [corr, v] : heap) {
      Edge e = make_edge(static_cast<std::uint32_t>(u), v);
      if (picked.insert(edge_key(e)).second) out.push_back({e.u, e.v, corr});
    }
  }
  std::sort(out.begin(), out.end(), correlation_order);
  return out;
}

std::pair<Graph, TUDecision> add_edges(const Graph& graph, const Matrix& preds,
                                       const TUThresholds& thresholds) {
  check_alignment(graph, preds);
  auto pool = addition_pool(graph, preds, thresholds);
  auto cap = static_cast<std::int64_t>(thresholds.max_added_ratio *
                                       static_cast<double>(graph.num_edges()));
  TUDecision decision;
  for (const auto& cand : pool) {
    if (static_cast<std::int64_t>(decision.additions.size()) >= cap) break;
    decision.additions.push_back(cand);
  }
  return {apply_decision(graph, decision), std::move(decision)};
}

std::pair<Graph, TUDecision> modify(const Graph& graph, const Matrix& preds,
                                    const TUThresholds& thresholds) {
  check_alignment(graph, preds);
  auto [deleted_graph, decision] = delete_edges(graph, preds, thresholds);
  const std::size_t budget = decision.deletions.size();
  if (budget > 0) {
    std::unordered_set<std::uint64_t> removed;
    for (const auto& d : decision.deletions) removed.insert(edge_key(make_edge(d.u, d.v)));
    // Candidates come from the original topology so a deleted pair can rank;
    // the filter below enforces that it is never added back.
    auto pool = addition_pool(graph, preds, thresholds);
    for (const auto& cand : pool) {
      if (decision.additions.size() >= budget) break;
      if (removed.count(edge_key(make_edge(cand.u, cand.v)))) continue;
      decision.additions.push_back(cand);
    }
  }
  std::vector<Edge> edges = deleted_graph.edges();
  for (const auto& a : decision.additions) edges.push_back(make_edge(a.u, a.v));
  return {graph.with_edges(std::move(edges)), std::move(decision)};
}

TUDecision dual_model_intersection(const TUDecision& d1, const TUDecision& d2) {
  auto intersect = [](const std::vector<ScoredPair>& a, const std::vector<ScoredPair>& b) {
    std::unordered_map<std::uint64_t, double> corr_b;
    for (const auto& p : b) corr_b[edge_key(make_edge(p.u, p.v))] = p.correlation;
    std::vector<ScoredPair> out;
    for (const auto& p : a) {
      auto it = corr_b.find(edge_key(make_edge(p.u, p.v)));
      if (it != corr_b.end())
        out.push_back({p.u, p.v, std::min(p.correlation, it->second)});
    }
    return out;
  };
  return {intersect(d1.deletions, d2.deletions), intersect(d1.additions, d2.additions)};
}

TuneTUResult tune_tu(const Graph& graph, const Split& split, const ModelConfig& base_config,
                     TUMode mode, const std::vector<TUThresholds>& grid, int jobs) {
  if (grid.empty()) throw ConfigError("tune_tu: threshold grid is empty");
  bool has_rejection = std::any_of(grid.begin(), grid.end(),
                                   [](const TUThresholds& t) { return t.is_rejection(); });
  if (!has_rejection)
    throw ConfigError("tune_tu: grid must include the rejection setting (tau_d=0, tau_a=1)");

  // The proposal depends only on the original graph and the derived seed, so
  // one training serves every grid point.
  ModelConfig proposal_config = base_config;
  proposal_config.seed = derive_seed(base_config.seed, {stage::kProposalModel});
  TrainedModel proposal = train(graph, split, proposal_config);
  Matrix preds = predict(proposal, graph);

  ModelConfig retrain_config = base_config;
  retrain_config.seed = derive_seed(base_config.seed, {stage::kRetrainModel});

  struct Cell {
    double val_acc = 0.0;
    Graph updated;
    TUDecision decision;
  };
  std::vector<std::optional<Cell>> cells(grid.size());
  parallel_for(grid.size(), jobs, [&](std::size_t i) {
    auto [updated, decision] = mode == TUMode::Delete ? delete_edges(graph, preds, grid[i])
                               : mode == TUMode::Add  ? add_edges(graph, preds, grid[i])
                                                      : modify(graph, preds, grid[i]);
    TrainedModel retrained = train(updated, split, retrain_config);
    double val_acc = accuracy(predict(retrained, updated), updated, split.val);
    cells[i] = Cell{val_acc, std::move(updated), std::move(decision)};
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (cells[i]->val_acc > cells[best]->val_acc) best = i;

  TuneTUResult result{grid[best], cells[best]->val_acc, std::move(cells[best]->updated),
                      std::move(cells[best]->decision), {}};
  for (std::size_t i = 0; i < grid.size(); ++i)
    result.grid.push_back({grid[i], cells[i]->val_acc,
                           static_cast<std::int64_t>(cells[i]->decision.deletions.size()),
                           static_cast<std::int64_t>(cells[i]->decision.additions.size())});
  return result;
}

std::vector<TUThresholds> default_tu_grid(TUMode mode) {
  const std::vector<double> tau_d_grid = {0.0, 0.05, 0.1, 0.2, 0.3, 0.5};
  const std::vector<double> tau_a_grid = {1.0, 0.99, 0.95, 0.9, 0.8};
  std::vector<TUThresholds> grid;
  switch (mode) {
    case TUMode::Delete:
      for (double tau_d : tau_d_grid) grid.push_back({.tau_d = tau_d, .tau_a = 1.0});
      break;
    case TUMode::Add:
      for (double tau_a : tau_a_grid) grid.push_back({.tau_d = 0.0, .tau_a = tau_a});
      break;
    case TUMode::Modify:
      grid.push_back({.tau_d = 0.0, .tau_a = 1.0});  // rejection
      for (double tau_d : tau_d_grid)
        if (tau_d > 0.0) grid.push_back({.tau_d = tau_d, .tau_a = 0.0});
      break;
  }
  return grid;
}

}  // namespace seg
