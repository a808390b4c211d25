#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "seg/common.hpp"
#include "seg/graph.hpp"

namespace seg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const fs::path& file, std::int64_t line, const std::string& what) {
  throw DataError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  return in;
}

std::vector<Edge> read_edges(const fs::path& path, std::int64_t n) {
  auto in = open_or_throw(path);
  std::vector<Edge> edges;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::int64_t u = -1, v = -1;
    if (!(ls >> u >> v)) fail(path, lineno, "expected two integers 'u v'");
    if (u < 0 || u >= n || v < 0 || v >= n)
      fail(path, lineno, "node index out of range (n=" + std::to_string(n) + ")");
    edges.push_back(make_edge(static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(v)));
  }
  return edges;
}

std::vector<int> read_labels(const fs::path& path, std::int64_t n, int c) {
  auto in = open_or_throw(path);
  std::vector<int> labels;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::int64_t y = -1;
    if (!(ls >> y)) fail(path, lineno, "expected one integer label");
    if (y < 0 || y >= c) fail(path, lineno, "label " + std::to_string(y) + " >= num_classes");
    labels.push_back(static_cast<int>(y));
  }
  if (static_cast<std::int64_t>(labels.size()) != n)
    fail(path, lineno, "expected " + std::to_string(n) + " labels, got " +
                           std::to_string(labels.size()));
  return labels;
}

Matrix read_features_csv(const fs::path& path, std::int64_t n, int d) {
  auto in = open_or_throw(path);
  Matrix x(n, d);
  std::string line;
  std::int64_t row = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (row >= n) fail(path, lineno, "more feature rows than num_nodes");
    std::istringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= d) fail(path, lineno, "more than feature_dim=" + std::to_string(d) + " columns");
      try {
        x(row, col) = std::stod(cell);
      } catch (const std::exception&) {
        fail(path, lineno, "cannot parse '" + cell + "' as a real number");
      }
      ++col;
    }
    if (col != d)
      fail(path, lineno, "expected " + std::to_string(d) + " columns, got " + std::to_string(col));
    ++row;
  }
  if (row != n)
    fail(path, lineno, "expected " + std::to_string(n) + " feature rows, got " +
                           std::to_string(row));
  return x;
}

Matrix read_features_f64(const fs::path& path, std::int64_t n, int d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  Matrix x(n, d);
  in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(n) * d * sizeof(double));
  if (in.gcount() != static_cast<std::streamsize>(n) * d * static_cast<std::streamsize>(sizeof(double)))
    throw DataError(path.string() + ": expected " + std::to_string(n * d) +
                    " little-endian float64 values (row-major)");
  char extra;
  if (in.read(&extra, 1))
    throw DataError(path.string() + ": trailing bytes after " + std::to_string(n * d) + " values");
  return x;
}

}  // namespace

Graph load_graph(const fs::path& manifest_path) {
  fs::path manifest = manifest_path;
  if (fs::is_directory(manifest)) manifest /= "manifest.json";
  auto in = open_or_throw(manifest);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(manifest.string() + ": " + e.what());
  }

  auto require = [&](const char* key) -> const json& {
    if (!doc.contains(key))
      throw DataError(manifest.string() + ": missing required key '" + key + "'");
    return doc.at(key);
  };
  const std::int64_t n = require("num_nodes").get<std::int64_t>();
  const int c = require("num_classes").get<int>();
  const int d = require("feature_dim").get<int>();
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  const fs::path edges_path = resolve(require("edges").get<std::string>());
  const fs::path labels_path = resolve(require("labels").get<std::string>());
  const fs::path features_path = resolve(require("features").get<std::string>());

  auto edges = read_edges(edges_path, n);
  auto labels = read_labels(labels_path, n, c);
  Matrix features = features_path.extension() == ".f64"
                        ? read_features_f64(features_path, n, d)
                        : read_features_csv(features_path, n, d);

  if (doc.value("row_normalize", false)) {
    for (std::int64_t v = 0; v < n; ++v) {
      double norm = features.row(v).cwiseAbs().sum();
      if (norm > 0.0) features.row(v) /= norm;
    }
  }
  bool allow_self_loops = doc.value("allow_self_loops", false);
  return Graph(n, c, std::move(edges), std::move(features), std::move(labels), allow_self_loops);
}

void save_graph(const Graph& graph, const fs::path& dir) {
  fs::create_directories(dir);

  {
    std::ofstream out(dir / "edges.txt");
    if (!out) throw DataError("cannot write " + (dir / "edges.txt").string());
    for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << '\n';
  }
  {
    std::ofstream out(dir / "labels.txt");
    if (!out) throw DataError("cannot write " + (dir / "labels.txt").string());
    for (int y : graph.labels()) out << y << '\n';
  }
  {
    std::ofstream out(dir / "features.f64", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "features.f64").string());
    out.write(reinterpret_cast<const char*>(graph.features().data()),
              static_cast<std::streamsize>(graph.num_nodes()) * graph.feature_dim() *
                  sizeof(double));
  }

  json manifest = {
      {"num_nodes", graph.num_nodes()},   {"num_classes", graph.num_classes()},
      {"feature_dim", graph.feature_dim()}, {"edges", "edges.txt"},
      {"labels", "labels.txt"},           {"features", "features.f64"},
  };
  if (graph.has_self_loops()) manifest["allow_self_loops"] = true;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace seg
