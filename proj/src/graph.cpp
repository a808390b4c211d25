#include "seg/graph.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

namespace {
std::atomic<std::uint64_t> g_graph_uid{1};
}

Graph::Graph(std::int64_t num_nodes, int num_classes, std::vector<Edge> edges,
             Matrix features, std::vector<int> labels, bool allow_self_loops)
    : num_nodes_(num_nodes),
      num_classes_(num_classes),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      has_self_loops_(false),
      uid_(g_graph_uid.fetch_add(1)) {
  if (num_nodes_ < 0) throw DataError("num_nodes must be nonnegative");
  if (num_classes_ < 1) throw DataError("num_classes must be >= 1");
  if (static_cast<std::int64_t>(labels_.size()) != num_nodes_)
    throw DataError("labels size " + std::to_string(labels_.size()) + " != num_nodes " +
                    std::to_string(num_nodes_));
  if (features_.rows() != num_nodes_)
    throw DataError("feature matrix has " + std::to_string(features_.rows()) +
                    " rows, expected " + std::to_string(num_nodes_));
  for (std::int64_t v = 0; v < num_nodes_; ++v) {
    if (labels_[v] < 0 || labels_[v] >= num_classes_)
      throw DataError("label " + std::to_string(labels_[v]) + " of node " + std::to_string(v) +
                      " outside [0, " + std::to_string(num_classes_) + ")");
  }

  for (auto& e : edges_) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.v >= num_nodes_)
      throw DataError("node index " + std::to_string(e.v) + " out of range (n=" +
                      std::to_string(num_nodes_) + ")");
    if (e.u == e.v) {
      if (!allow_self_loops)
        throw DataError("self-loop at node " + std::to_string(e.u) + " not permitted");
      has_self_loops_ = true;
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  edge_set_.reserve(edges_.size() * 2);
  for (const auto& e : edges_) edge_set_.insert(edge_key(e));

  // CSR over the symmetrized adjacency; a self-loop contributes one entry.
  std::vector<std::int64_t> degree(static_cast<std::size_t>(num_nodes_), 0);
  for (const auto& e : edges_) {
    degree[e.u]++;
    if (e.u != e.v) degree[e.v]++;
  }
  row_ptr_.assign(static_cast<std::size_t>(num_nodes_) + 1, 0);
  for (std::int64_t v = 0; v < num_nodes_; ++v) row_ptr_[v + 1] = row_ptr_[v] + degree[v];
  col_idx_.resize(static_cast<std::size_t>(row_ptr_[num_nodes_]));
  std::vector<std::int64_t> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
  for (const auto& e : edges_) {
    col_idx_[cursor[e.u]++] = e.v;
    if (e.u != e.v) col_idx_[cursor[e.v]++] = e.u;
  }
  for (std::int64_t v = 0; v < num_nodes_; ++v)
    std::sort(col_idx_.begin() + row_ptr_[v], col_idx_.begin() + row_ptr_[v + 1]);
}

Graph Graph::with_edges(std::vector<Edge> edges) const {
  return Graph(num_nodes_, num_classes_, std::move(edges), features_, labels_,
               /*allow_self_loops=*/true);
}

NoiseReport noise_ratio(const Graph& graph) {
  NoiseReport report;
  report.num_edges = graph.num_edges();
  const auto& labels = graph.labels();
  for (const auto& e : graph.edges()) {
    if (e.u != e.v && labels[e.u] != labels[e.v])
      report.num_inter++;
    else
      report.num_intra++;
  }
  if (report.num_edges == 0) {
    report.zero_edges = true;
    report.noise_ratio = 0.0;
  } else {
    report.noise_ratio = static_cast<double>(report.num_inter) / report.num_edges;
  }
  return report;
}

void PlantedPartitionSpec::validate() const {
  if (n < 1) throw ConfigError("planted partition: n must be >= 1");
  if (c < 1) throw ConfigError("planted partition: c must be >= 1");
  if (n < c) throw ConfigError("planted partition: n < c leaves some class empty");
  if (p_intra < 0.0 || p_intra > 1.0 || p_inter < 0.0 || p_inter > 1.0)
    throw ConfigError("planted partition: probabilities must be in [0,1]");
  if (feature_dim < 1) throw ConfigError("planted partition: feature_dim must be >= 1");
  if (feature_signal < 0.0) throw ConfigError("planted partition: feature_signal must be >= 0");
}

Graph generate_planted_partition(const PlantedPartitionSpec& spec) {
  spec.validate();
  const std::int64_t n = spec.n;
  const int c = spec.c;

  // Balanced contiguous class blocks: sizes differ by at most one.
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) labels[v] = static_cast<int>((v * c) / n);

  Rng rng(derive_seed(spec.seed, {0x5e9e5}));
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u + 1 < static_cast<std::uint64_t>(n); ++u) {
    for (std::uint32_t v = u + 1; v < static_cast<std::uint64_t>(n); ++v) {
      double p = labels[u] == labels[v] ? spec.p_intra : spec.p_inter;
      if (rng.bernoulli(p)) edges.push_back({u, v});
    }
  }

  Rng feature_rng(derive_seed(spec.seed, {0xfea7}));
  Matrix means(c, spec.feature_dim);
  for (int k = 0; k < c; ++k)
    for (int j = 0; j < spec.feature_dim; ++j) means(k, j) = feature_rng.normal();
  Matrix features(n, spec.feature_dim);
  for (std::int64_t v = 0; v < n; ++v)
    for (int j = 0; j < spec.feature_dim; ++j)
      features(v, j) = spec.feature_signal * means(labels[v], j) + feature_rng.normal();

  return Graph(n, c, std::move(edges), std::move(features), std::move(labels));
}

Graph perturb_with_ground_truth(const Graph& graph, PerturbMode mode, std::int64_t count,
                                std::uint64_t seed) {
  if (count < 0) throw ConfigError("perturb count must be nonnegative");
  const auto& labels = graph.labels();
  Rng rng(derive_seed(seed, {0x9e27, static_cast<std::uint64_t>(mode)}));

  if (mode == PerturbMode::DeleteInter) {
    std::vector<std::size_t> inter_pos;
    const auto& edges = graph.edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].u != edges[i].v && labels[edges[i].u] != labels[edges[i].v])
        inter_pos.push_back(i);
    if (count > static_cast<std::int64_t>(inter_pos.size()))
      throw ConfigError("delete_inter count " + std::to_string(count) +
                        " exceeds inter-class edge pool of size " +
                        std::to_string(inter_pos.size()));
    rng.shuffle(inter_pos);
    std::unordered_set<std::size_t> drop(inter_pos.begin(), inter_pos.begin() + count);
    std::vector<Edge> kept;
    kept.reserve(edges.size() - count);
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (!drop.count(i)) kept.push_back(edges[i]);
    return graph.with_edges(std::move(kept));
  }

  // AddIntra: enumerate eligible within-class non-edges, then sample.
  std::vector<std::vector<std::uint32_t>> by_class(graph.num_classes());
  for (std::int64_t v = 0; v < graph.num_nodes(); ++v)
    by_class[labels[v]].push_back(static_cast<std::uint32_t>(v));
  std::vector<Edge> pool;
  for (const auto& members : by_class) {
    for (std::size_t i = 0; i + 1 < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j)
        if (!graph.has_edge(members[i], members[j])) pool.push_back({members[i], members[j]});
  }
  if (count > static_cast<std::int64_t>(pool.size()))
    throw ConfigError("add_intra count " + std::to_string(count) +
                      " exceeds eligible non-edge pool of size " + std::to_string(pool.size()));
  rng.shuffle(pool);
  std::vector<Edge> edges = graph.edges();
  edges.insert(edges.end(), pool.begin(), pool.begin() + count);
  return graph.with_edges(std::move(edges));
}

}  // namespace seg
