#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

namespace seg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Unordered node pair stored canonically with u <= v.
struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(std::uint32_t a, std::uint32_t b) {
  return a <= b ? Edge{a, b} : Edge{b, a};
}

inline std::uint64_t edge_key(const Edge& e) {
  return (static_cast<std::uint64_t>(e.u) << 32) | e.v;
}

/// Immutable undirected graph: canonical edge list, CSR adjacency, dense
/// features and per-node class labels. Safe to share read-only across threads.
class Graph {
 public:
  Graph(std::int64_t num_nodes, int num_classes, std::vector<Edge> edges,
        Matrix features, std::vector<int> labels, bool allow_self_loops = false);

  std::int64_t num_nodes() const { return num_nodes_; }
  int num_classes() const { return num_classes_; }
  std::int64_t num_edges() const { return static_cast<std::int64_t>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  bool has_self_loops() const { return has_self_loops_; }

  bool has_edge(std::uint32_t a, std::uint32_t b) const {
    return edge_set_.count(edge_key(make_edge(a, b))) > 0;
  }

  // CSR view over the symmetrized adjacency (self-loops appear once).
  const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }

  /// Copy of this graph with a replaced edge set (features/labels shared
  /// semantics via copy; used by topology update and perturbations).
  Graph with_edges(std::vector<Edge> edges) const;

  /// Process-unique id; lets caches detect that a model was trained on a
  /// different graph object.
  std::uint64_t uid() const { return uid_; }

 private:
  std::int64_t num_nodes_;
  int num_classes_;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<int> labels_;
  bool has_self_loops_;
  std::unordered_set<std::uint64_t> edge_set_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::uint64_t uid_;
};

struct NoiseReport {
  std::int64_t num_edges = 0;
  std::int64_t num_inter = 0;
  std::int64_t num_intra = 0;
  double noise_ratio = 0.0;
  bool zero_edges = false;  // ratio defined as 0 when the graph has no edges
};

/// Fraction of inter-class edges. Self-loops count as intra-class.
NoiseReport noise_ratio(const Graph& graph);

struct PlantedPartitionSpec {
  std::int64_t n = 0;
  int c = 2;
  double p_intra = 0.1;
  double p_inter = 0.01;
  int feature_dim = 16;
  double feature_signal = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Balanced planted partition; features are the class mean scaled by
/// feature_signal plus unit Gaussian noise.
Graph generate_planted_partition(const PlantedPartitionSpec& spec);

enum class PerturbMode { DeleteInter, AddIntra };

/// Ground-truth-guided perturbation: removes inter-class edges or adds
/// intra-class non-edges, exactly `count` of them, uniformly at random.
Graph perturb_with_ground_truth(const Graph& graph, PerturbMode mode, std::int64_t count,
                                std::uint64_t seed);

/// Loads a graph from a manifest JSON (or a directory containing
/// manifest.json). Edge lists are symmetrized and deduplicated.
Graph load_graph(const std::filesystem::path& manifest_path);

/// Writes manifest.json, edges.txt, labels.txt and features.f64 into dir.
void save_graph(const Graph& graph, const std::filesystem::path& dir);

}  // namespace seg
