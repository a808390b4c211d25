#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "seg/common.hpp"
#include "seg/graph.hpp"
#include "seg/rng.hpp"
#include "seg/topology.hpp"

using namespace seg;

namespace {

Matrix one_hot(const std::vector<int>& labels, int c) {
  Matrix preds = Matrix::Zero(static_cast<std::int64_t>(labels.size()), c);
  for (std::size_t v = 0; v < labels.size(); ++v) preds(v, labels[v]) = 1.0;
  return preds;
}

Graph alpha_partition(std::uint64_t seed, std::int64_t n = 150, int c = 3) {
  PlantedPartitionSpec spec;
  spec.n = n;
  spec.c = c;
  spec.p_intra = 0.12;
  spec.p_inter = 0.016;  // roughly alpha = 0.3 in expectation
  spec.feature_dim = 6;
  spec.feature_signal = 2.0;
  spec.seed = seed;
  return generate_planted_partition(spec);
}

std::set<std::pair<std::uint32_t, std::uint32_t>> pair_set(const std::vector<ScoredPair>& v) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const auto& p : v) out.insert({p.u, p.v});
  return out;
}

}  // namespace

TEST_CASE("label correlation basics") {
  Matrix preds(4, 4);
  preds << 1, 0, 0, 0,
           1, 0, 0, 0,
           0, 1, 0, 0,
           0.25, 0.25, 0.25, 0.25;
  CHECK(label_correlation(preds, 0, 1) == doctest::Approx(1.0));
  CHECK(label_correlation(preds, 0, 2) == doctest::Approx(0.0));
  Matrix uniform = Matrix::Constant(2, 4, 0.25);
  CHECK(label_correlation(uniform, 0, 1) == doctest::Approx(0.25));
}

TEST_CASE("delete_edges follows the keep rule and the threshold") {
  // nodes 0,1 predicted class 0; nodes 2,3 class 1 with mixed confidence
  Matrix preds(4, 2);
  preds << 0.9, 0.1,
           0.95, 0.05,
           0.1, 0.9,    // corr(1,2) = 0.95*0.1 + 0.05*0.9 = 0.14
           0.45, 0.55;  // edge (2,3): same argmax, never a candidate
  Graph g(4, 2, {{0, 1}, {1, 2}, {2, 3}}, Matrix::Zero(4, 2), {0, 0, 1, 1});

  SUBCASE("tau_d = 0 deletes nothing for positive correlations") {
    auto [updated, decision] = delete_edges(g, preds, {.tau_d = 0.0});
    CHECK(decision.deletions.empty());
    CHECK(updated.num_edges() == 3);
  }
  SUBCASE("threshold filters candidates") {
    auto [updated, decision] = delete_edges(g, preds, {.tau_d = 0.2});
    REQUIRE(decision.deletions.size() == 1);
    CHECK(decision.deletions[0].u == 1);
    CHECK(decision.deletions[0].v == 2);
    CHECK_FALSE(updated.has_edge(1, 2));
  }
  SUBCASE("agreeing argmax labels are never candidates") {
    Matrix agree = Matrix::Zero(4, 2);
    for (int v = 0; v < 4; ++v) agree(v, 0) = 0.6, agree(v, 1) = 0.4;
    auto [updated, decision] = delete_edges(g, agree, {.tau_d = 1.0});
    CHECK(decision.deletions.empty());
  }
}

TEST_CASE("delete_edges keeps self-loops") {
  Graph g(2, 2, {{0, 0}, {0, 1}}, Matrix::Zero(2, 2), {0, 1}, true);
  Matrix preds(2, 2);
  preds << 0.9, 0.1,
           0.1, 0.9;
  auto [updated, decision] = delete_edges(g, preds, {.tau_d = 1.0});
  CHECK(decision.deletions.size() == 1);
  CHECK(updated.has_edge(0, 0));
  CHECK_FALSE(updated.has_edge(0, 1));
}

TEST_CASE("two-edge threshold example") {
  // edge A = (0,1) corr 0.05; edge B = (2,3) corr 0.48; both differing argmax
  Matrix preds(4, 2);
  preds << 0.95, 0.05,
           0.0, 1.0,
           0.6, 0.4,
           0.4, 0.6;
  Graph g(4, 2, {{0, 1}, {2, 3}}, Matrix::Zero(4, 2), {0, 1, 0, 1});
  auto [updated, decision] = delete_edges(g, preds, {.tau_d = 0.2});
  REQUIRE(decision.deletions.size() == 1);
  CHECK(decision.deletions[0].u == 0);
  CHECK(decision.deletions[0].v == 1);
}

TEST_CASE("topk addition candidates") {
  // 3 nodes, one-hot [A, A, B], no edges
  Matrix preds = one_hot({0, 0, 1}, 2);
  Graph g(3, 2, {}, Matrix::Zero(3, 1), {0, 0, 1});
  auto cands = topk_addition_candidates(preds, g, 1);
  auto pairs = pair_set(cands);
  CHECK(pairs.count({0, 1}) == 1);
  CHECK(cands.front().correlation == doctest::Approx(1.0));  // sorted best-first

  SUBCASE("complete graph yields no candidates") {
    Graph complete(3, 2, {{0, 1}, {0, 2}, {1, 2}}, Matrix::Zero(3, 1), {0, 0, 1});
    CHECK(topk_addition_candidates(preds, complete, 2).empty());
  }
  SUBCASE("topk >= n-1 covers all non-edges") {
    Graph sparse(4, 2, {{0, 1}}, Matrix::Zero(4, 1), {0, 0, 1, 1});
    auto all = topk_addition_candidates(one_hot({0, 0, 1, 1}, 2), sparse, 3);
    CHECK(all.size() == 5);  // 6 pairs minus the existing edge
  }
}

TEST_CASE("add_edges thresholds, caps and argmax agreement") {
  Matrix preds(4, 2);
  preds << 0.995, 0.005,
           0.99, 0.01,
           0.97, 0.03,
           0.05, 0.95;
  Graph g(4, 2, {{0, 3}}, Matrix::Zero(4, 1), {0, 0, 0, 1});

  SUBCASE("tau_a = 1 admits only exact-one correlations") {
    auto [updated, decision] = add_edges(g, preds, {.tau_a = 1.0});
    CHECK(decision.additions.empty());
  }
  SUBCASE("additions keep the best correlations within the cap") {
    TUThresholds t{.tau_a = 0.5, .max_added_ratio = 2.0, .topk = 3};
    auto [updated, decision] = add_edges(g, preds, t);
    // cap = 2 * m = 2; candidates (0,1) .985, (0,2) .965, (1,2) .961
    REQUIRE(decision.additions.size() == 2);
    CHECK(decision.additions[0].correlation >= decision.additions[1].correlation);
    CHECK(pair_set(decision.additions).count({0, 1}) == 1);
    CHECK(pair_set(decision.additions).count({0, 2}) == 1);
    CHECK(updated.num_edges() == 3);
  }
  SUBCASE("differing argmax pairs are excluded even at high correlation") {
    Matrix mixed(3, 2);
    mixed << 0.55, 0.45,
             0.45, 0.55,
             0.54, 0.46;
    // corr(0,1) = 0.495 but argmax differs; corr(0,2) = 0.504 agrees
    Graph g3(3, 2, {{1, 2}}, Matrix::Zero(3, 1), {0, 0, 0});
    auto [updated, decision] = add_edges(g3, mixed, {.tau_a = 0.4, .topk = 2});
    auto pairs = pair_set(decision.additions);
    CHECK(pairs.count({0, 1}) == 0);
    CHECK(pairs.count({0, 2}) == 1);
  }
  SUBCASE("a graph without edges has a zero addition cap") {
    Graph empty(3, 2, {}, Matrix::Zero(3, 1), {0, 0, 0});
    auto [updated, decision] = add_edges(empty, one_hot({0, 0, 0}, 2), {.tau_a = 0.5, .topk = 2});
    CHECK(decision.additions.empty());
  }
}

TEST_CASE("one-hot ground truth: deletion empties the noise, addition adds none") {
  Graph g = alpha_partition(31);
  REQUIRE(noise_ratio(g).noise_ratio > 0.15);
  Matrix truth = one_hot(g.labels(), g.num_classes());

  auto [cleaned, del] = delete_edges(g, truth, {.tau_d = 1.0});
  CHECK(noise_ratio(cleaned).noise_ratio == 0.0);
  CHECK(static_cast<std::int64_t>(del.deletions.size()) == noise_ratio(g).num_inter);

  auto [denser, add] = add_edges(g, truth, {.tau_a = 0.9, .topk = 4});
  CHECK(add.additions.size() > 0);
  for (const auto& a : add.additions) CHECK(g.labels()[a.u] == g.labels()[a.v]);
  CHECK(noise_ratio(denser).num_inter == noise_ratio(g).num_inter);
}

TEST_CASE("threshold monotonicity") {
  Graph g = alpha_partition(32, 90);
  // noisy predictions: ground truth blended with uniform noise
  Matrix preds = one_hot(g.labels(), g.num_classes());
  Rng rng(5);
  for (std::int64_t v = 0; v < preds.rows(); ++v) {
    double w = 0.3 + 0.6 * rng.uniform();
    for (int k = 0; k < preds.cols(); ++k)
      preds(v, k) = w * preds(v, k) + (1.0 - w) / preds.cols();
  }

  std::size_t last_del = 0;
  for (double tau_d : {0.0, 0.1, 0.3, 0.6, 1.0}) {
    auto [_, decision] = delete_edges(g, preds, {.tau_d = tau_d});
    CHECK(decision.deletions.size() >= last_del);
    last_del = decision.deletions.size();
  }

  std::size_t last_add = SIZE_MAX;
  for (double tau_a : {0.2, 0.5, 0.8, 0.95}) {
    auto [_, decision] =
        add_edges(g, preds, {.tau_a = tau_a, .max_added_ratio = 100.0, .topk = 5});
    CHECK(decision.additions.size() <= last_add);
    last_add = decision.additions.size();
  }
}

TEST_CASE("modify budgets additions by the deletion count") {
  Graph g = alpha_partition(33);
  Matrix truth = one_hot(g.labels(), g.num_classes());

  SUBCASE("zero deletions give zero additions") {
    // softmax-like outputs: strictly positive, so tau_d = 0 deletes nothing
    Matrix soft = 0.9 * truth + Matrix::Constant(truth.rows(), truth.cols(),
                                                 0.1 / g.num_classes());
    auto [updated, decision] = modify(g, soft, {.tau_d = 0.0, .tau_a = 0.0, .topk = 3});
    CHECK(decision.deletions.empty());
    CHECK(decision.additions.empty());
    CHECK(updated.edges() == g.edges());
  }
  SUBCASE("additions match deletions when candidates abound") {
    auto [updated, decision] = modify(g, truth, {.tau_d = 1.0, .tau_a = 0.0, .topk = 6});
    CHECK(decision.deletions.size() > 0);
    CHECK(decision.additions.size() == decision.deletions.size());
    CHECK(updated.num_edges() == g.num_edges());
    // additions are the top correlations in order
    for (std::size_t i = 1; i < decision.additions.size(); ++i)
      CHECK(decision.additions[i - 1].correlation >= decision.additions[i].correlation);
  }
}

TEST_CASE("modify never re-adds a deleted pair") {
  // preds disagree with the edge (0,1) so it gets deleted; the same pair
  // would top the addition ranking if it were allowed back
  Matrix preds(4, 2);
  preds << 1.0, 0.0,
           0.0, 1.0,
           1.0, 0.0,
           0.0, 1.0;
  Graph g(4, 2, {{0, 1}}, Matrix::Zero(4, 1), {0, 0, 1, 1});
  auto [updated, decision] = modify(g, preds, {.tau_d = 1.0, .tau_a = 0.0, .topk = 3});
  REQUIRE(decision.deletions.size() == 1);
  REQUIRE(decision.additions.size() == 1);
  CHECK(pair_set(decision.additions).count({0, 1}) == 0);
  CHECK_FALSE(updated.has_edge(0, 1));
}

TEST_CASE("dual model intersection") {
  TUDecision d1{{{0, 1, 0.2}, {2, 3, 0.1}}, {{4, 5, 0.9}}};
  TUDecision d2{{{0, 1, 0.15}}, {{4, 5, 0.95}, {6, 7, 0.99}}};
  auto inter = dual_model_intersection(d1, d2);
  REQUIRE(inter.deletions.size() == 1);
  CHECK(inter.deletions[0].correlation == doctest::Approx(0.15));  // minimum
  REQUIRE(inter.additions.size() == 1);
  CHECK(inter.additions[0].correlation == doctest::Approx(0.9));

  auto self = dual_model_intersection(d1, d1);
  CHECK(pair_set(self.deletions) == pair_set(d1.deletions));

  TUDecision empty;
  CHECK(dual_model_intersection(d1, empty).deletions.empty());
  CHECK(dual_model_intersection(d1, empty).additions.empty());
}

TEST_CASE("tune_tu requires and honors the rejection setting") {
  Graph g = alpha_partition(34, 120);
  Split split;
  for (std::int32_t v = 0; v < g.num_nodes(); ++v) {
    if (v % 3 == 0) split.train.push_back(v);
    else if (v % 3 == 1) split.val.push_back(v);
    else split.test.push_back(v);
  }
  ModelConfig cfg;
  cfg.kind = ModelKind::SGC;
  cfg.epochs = 120;
  cfg.seed = 99;

  CHECK_THROWS_AS(tune_tu(g, split, cfg, TUMode::Delete, {{.tau_d = 0.3}}, 1), ConfigError);

  // rejection-only grid returns the baseline
  auto rejection_only = tune_tu(g, split, cfg, TUMode::Delete, {TUThresholds{}}, 1);
  CHECK(rejection_only.best.is_rejection());
  CHECK(rejection_only.updated.edges() == g.edges());

  auto tuned = tune_tu(g, split, cfg, TUMode::Delete, default_tu_grid(TUMode::Delete), 1);
  CHECK(tuned.val_accuracy >= rejection_only.val_accuracy);
  CHECK(tuned.grid.size() == default_tu_grid(TUMode::Delete).size());

  // with a reasonably accurate base model the tuned graph is not noisier
  if (!tuned.best.is_rejection())
    CHECK(noise_ratio(tuned.updated).noise_ratio <= noise_ratio(g).noise_ratio + 1e-12);
}
