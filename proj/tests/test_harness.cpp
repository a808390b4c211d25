#include <doctest.h>

#include <cmath>
#include <set>

#include "seg/common.hpp"
#include "seg/harness.hpp"

using namespace seg;

namespace {

Graph protocol_graph(std::uint64_t seed, std::int64_t n = 120, int c = 2) {
  PlantedPartitionSpec spec;
  spec.n = n;
  spec.c = c;
  spec.p_intra = 0.12;
  spec.p_inter = 0.02;
  spec.feature_dim = 6;
  spec.feature_signal = 1.2;
  spec.seed = seed;
  return generate_planted_partition(spec);
}

ProtocolConfig small_protocol(std::uint64_t master = 1) {
  ProtocolConfig cfg;
  cfg.n_train_per_class = 6;
  cfg.n_val_per_class = 10;
  cfg.n_splits = 2;
  cfg.n_seeds = 2;
  cfg.master_seed = master;
  return cfg;
}

ProtocolOptions sgc_options() {
  ProtocolOptions opt;
  opt.model.kind = ModelKind::SGC;
  opt.model.epochs = 80;
  opt.jobs = 2;
  return opt;
}

Matrix one_hot(const std::vector<int>& labels, int c) {
  Matrix preds = Matrix::Zero(static_cast<std::int64_t>(labels.size()), c);
  for (std::size_t v = 0; v < labels.size(); ++v) preds(v, labels[v]) = 1.0;
  return preds;
}

}  // namespace

TEST_CASE("make_splits sizes and determinism") {
  PlantedPartitionSpec spec;
  spec.n = 200;
  spec.c = 2;
  spec.p_intra = 0.05;
  spec.p_inter = 0.01;
  spec.seed = 2;
  Graph g = generate_planted_partition(spec);

  ProtocolConfig protocol;  // paper defaults: 20 train, 30 val per class
  protocol.n_splits = 3;
  auto splits = make_splits(g, protocol);
  REQUIRE(splits.size() == 3);
  for (const auto& s : splits) {
    CHECK(s.train.size() == 40);
    CHECK(s.val.size() == 60);
    CHECK(s.test.size() == 100);
    s.validate(g.num_nodes());
    // stratification: 20 train nodes from each class
    int class0 = 0;
    for (auto v : s.train)
      if (g.labels()[v] == 0) ++class0;
    CHECK(class0 == 20);
  }
  CHECK(splits[0].train != splits[1].train);

  auto again = make_splits(g, protocol);
  for (int i = 0; i < 3; ++i) CHECK(again[i].train == splits[i].train);

  ProtocolConfig big = protocol;
  big.n_train_per_class = 80;  // 80 + 30 > 100 per class
  CHECK_THROWS_AS(make_splits(g, big), ConfigError);
}

TEST_CASE("error reduction matches the published arithmetic") {
  CHECK(error_reduction(0.787, 0.823) == doctest::Approx(0.169).epsilon(0.006));
  CHECK(error_reduction(0.787, 0.792) == doctest::Approx(0.0235).epsilon(0.01));
  CHECK(error_reduction(0.665, 0.711) == doctest::Approx(0.1373).epsilon(0.002));
  CHECK(error_reduction(0.5, 0.5) == 0.0);
  CHECK(error_reduction(0.9, 0.8) < 0.0);
  CHECK_THROWS_AS(error_reduction(1.0, 0.9), ConfigError);
}

TEST_CASE("run report aggregates recompute consistently") {
  RunReport report;
  report.accuracies = {{0.8, 0.9}, {0.7, 0.6}};
  report.recompute();
  CHECK(report.mean == doctest::Approx(0.75));
  double stored_mean = report.mean;
  double stored_std = report.std_over_runs;
  double stored_split_std = report.std_over_split_means;
  report.recompute();
  CHECK(std::abs(report.mean - stored_mean) <= 1e-12);
  CHECK(std::abs(report.std_over_runs - stored_std) <= 1e-12);
  CHECK(std::abs(report.std_over_split_means - stored_split_std) <= 1e-12);
  // split means are 0.85 and 0.65
  CHECK(report.std_over_split_means == doctest::Approx(std::sqrt(0.02)));
}

TEST_CASE("baseline protocol shape and determinism") {
  Graph g = protocol_graph(4);
  auto protocol = small_protocol(3);
  auto options = sgc_options();
  RunReport a = run_protocol(g, Method::Baseline, protocol, options);
  REQUIRE(a.accuracies.size() == 2);
  REQUIRE(a.accuracies[0].size() == 2);
  for (const auto& row : a.accuracies)
    for (double acc : row) CHECK((acc >= 0.0 && acc <= 1.0));

  RunReport b = run_protocol(g, Method::Baseline, protocol, options);
  CHECK(a.accuracies == b.accuracies);
  CHECK(a.mean == b.mean);
}

TEST_CASE("rejection-only grids reproduce the baseline exactly") {
  Graph g = protocol_graph(5);
  auto protocol = small_protocol(7);
  auto options = sgc_options();
  options.tu_grid = {TUThresholds{}};  // rejection
  options.tna_grid = {1.5};            // rejection

  RunReport base = run_protocol(g, Method::Baseline, protocol, options);
  for (Method method : {Method::TU, Method::TNA, Method::SEG}) {
    RunReport report = run_protocol(g, method, protocol, options);
    CHECK(report.accuracies == base.accuracies);
  }
}

TEST_CASE("tuned methods stay within the paired band of the baseline") {
  Graph g = protocol_graph(6, 160);
  auto protocol = small_protocol(11);
  auto options = sgc_options();
  options.tu_grid = {TUThresholds{}, {.tau_d = 0.1}, {.tau_d = 0.3}};
  options.tna_grid = {1.5, 0.9, 0.7};

  RunReport base = run_protocol(g, Method::Baseline, protocol, options);
  for (Method method : {Method::TU, Method::TNA}) {
    RunReport report = run_protocol(g, method, protocol, options);
    // paired differences over the shared (split, seed) grid
    std::vector<double> diffs;
    for (std::size_t s = 0; s < base.accuracies.size(); ++s)
      for (std::size_t j = 0; j < base.accuracies[s].size(); ++j)
        diffs.push_back(report.accuracies[s][j] - base.accuracies[s][j]);
    double mean = 0.0;
    for (double d : diffs) mean += d;
    mean /= static_cast<double>(diffs.size());
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    double se = std::sqrt(ss / (diffs.size() - 1.0) / diffs.size());
    CHECK(mean >= -2.0 * se - 1e-12);
  }
}

TEST_CASE("seg pipeline tie-break prefers TU, then TNA") {
  Graph g = protocol_graph(8);
  auto protocol = small_protocol(13);
  protocol.n_splits = 1;
  auto options = sgc_options();
  auto splits = make_splits(g, protocol);
  const Split& split = splits[0];

  ModelConfig cfg = options.model;
  cfg.seed = 100;
  auto tu = tune_tu(g, split, cfg, TUMode::Delete, {TUThresholds{}}, 1);
  auto tna = tune_tna(g, split, cfg, 2, {1.5}, 200, 1);
  auto result = seg_pipeline(g, split, options.model, tu, tna, 2, 300);
  CHECK(result.chosen == "tu");  // all three validation scores coincide
  CHECK(result.val_tu == result.val_tna);
  CHECK(result.val_tu == result.val_both);
}

TEST_CASE("noise sweep endpoints") {
  Graph g = protocol_graph(9, 160);
  auto protocol = small_protocol(17);
  auto options = sgc_options();

  auto rows = noise_accuracy_sweep(g, PerturbMode::DeleteInter, {0.0, 0.5, 1.0}, protocol,
                                   options);
  REQUIRE(rows.size() == 3);
  RunReport base = run_protocol(g, Method::Baseline, protocol, options);
  CHECK(rows[0].x == doctest::Approx(noise_ratio(g).noise_ratio));
  CHECK(rows[0].mean == doctest::Approx(base.mean));  // fraction 0 = baseline
  CHECK(rows[2].x == 0.0);                            // all inter-class edges removed
  CHECK(rows[0].x > rows[1].x);
  CHECK(rows[1].x > rows[2].x);

  CHECK_THROWS_AS(noise_accuracy_sweep(g, PerturbMode::DeleteInter, {}, protocol, options),
                  ConfigError);
}

TEST_CASE("train size sweep") {
  Graph g = protocol_graph(10);
  auto protocol = small_protocol(19);
  auto options = sgc_options();
  auto rows = trainsize_accuracy_sweep(g, {4, 6}, protocol, options);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].x == 4);
  CHECK(rows[1].x == 6);
  // the size matching the protocol reproduces the baseline
  ProtocolConfig at6 = protocol;
  at6.n_train_per_class = 6;
  CHECK(rows[1].mean == doctest::Approx(run_protocol(g, Method::Baseline, at6, options).mean));

  CHECK_THROWS_AS(trainsize_accuracy_sweep(g, {}, protocol, options), ConfigError);
}

TEST_CASE("reliability curve") {
  std::vector<int> labels = {0, 1, 2, 0, 1, 2};
  Matrix correct = one_hot(labels, 3);
  auto bins = reliability_curve(correct, labels, 5);
  REQUIRE(bins.size() == 5);
  std::int64_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 6);
  CHECK(bins.back().count == 6);  // confidence 1.0 lands in the top bin
  CHECK(bins.back().accuracy == doctest::Approx(1.0));

  Matrix uniform = Matrix::Constant(6, 3, 1.0 / 3.0);
  auto ubins = reliability_curve(uniform, labels, 5);
  CHECK(ubins.front().count == 6);  // confidence 1/c lands in the bottom bin
  CHECK(ubins.front().accuracy == doctest::Approx(1.0 / 3.0));  // argmax 0 hits class 0
}

TEST_CASE("correlation same-label curve") {
  std::vector<int> labels = {0, 0, 1, 1, 2, 2};
  Matrix truth = one_hot(labels, 3);
  auto bins = correlation_samelabel_curve(truth, labels, 500, 4, 3);
  REQUIRE(bins.size() == 4);
  std::int64_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 500);
  CHECK(bins.front().count > 0);
  CHECK(bins.front().same_label_fraction == doctest::Approx(0.0));  // orthogonal one-hots
  CHECK(bins.back().count > 0);
  CHECK(bins.back().same_label_fraction == doctest::Approx(1.0));  // identical one-hots
}
