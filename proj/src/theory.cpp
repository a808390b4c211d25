#include "seg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>
#include <utility>

#include "seg/common.hpp"
#include "seg/rng.hpp"

namespace seg {

namespace {

void require_classes(int c) {
  if (c < 2) throw ConfigError("theory: c must be >= 2");
}

void require_prob(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(std::string("theory: ") + name + " must be in [0,1]");
}

/// Draw one symmetric-error prediction for a node with ground truth `label`.
int draw_symmetric(Rng& rng, int label, double p, int c) {
  if (rng.bernoulli(p)) return label;
  int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c - 1)));
  return k >= label ? k + 1 : k;
}

/// Mean and standard error of the mean over per-trial values.
std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

void TheoryParams::validate() const {
  require_classes(c);
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("theory: p must be in (0,1]");
  require_prob(alpha, "alpha");
  require_prob(beta, "beta");
  if (lambda < 0.0) throw ConfigError("theory: lambda must be >= 0");
}

double keep_prob_intra(double p, int c) {
  require_classes(c);
  return p * p + (1.0 - p) * (1.0 - p) / (c - 1);
}

double keep_prob_inter(double p, int c) {
  require_classes(c);
  const double q = (1.0 - p) / (c - 1);
  return 2.0 * p * q + (c - 2) * q * q;
}

double expected_noise_after_deletion(double alpha, double p, int c) {
  const double pr = keep_prob_inter(p, c);
  const double pa = keep_prob_intra(p, c);
  const double denom = alpha * pr + (1.0 - alpha) * pa;
  if (denom == 0.0) throw ConfigError("expected_noise_after_deletion: degenerate denominator");
  return alpha * pr / denom;
}

bool deletion_improves(double p, int c) {
  require_classes(c);
  return p > 2.0 / (c + 1);
}

AdditionBound addition_threshold(double alpha, int c, double lambda) {
  require_classes(c);
  if (c + alpha - 1.0 <= 0.0) throw ConfigError("addition_threshold: c + alpha - 1 must be > 0");
  AdditionBound bound;
  const double disc =
      alpha * alpha + ((c - 1.0) * (1.0 + c * alpha * lambda) - c * alpha) * (c + alpha - 1.0);
  bound.discriminant_ok = disc >= 0.0;
  bound.exact = bound.discriminant_ok
                    ? (alpha + std::sqrt(disc)) / (c + alpha - 1.0)
                    : std::numeric_limits<double>::quiet_NaN();
  bound.approx_no_lambda =
      (alpha + std::sqrt((c - 1.0) * (c - 1.0 - c * alpha))) / (c - 1.0);
  bound.approx_sqrt = std::sqrt(1.0 - alpha);
  return bound;
}

double gamma_from_beta(double p, double beta) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("gamma_from_beta: p must be in (0,1)");
  require_prob(beta, "beta");
  double gamma = p * (1.0 - beta) / (1.0 - p);
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("gamma_from_beta: implied gamma " + std::to_string(gamma) +
                      " lies outside [0,1]");
  return gamma;
}

double tna_accuracy_q(double p, double beta, int c) {
  require_classes(c);
  return (c - 1.0) * p * beta / (c * p * beta + 1.0 - 2.0 * p);
}

std::vector<int> simulate_symmetric_classifier(const std::vector<int>& labels, double p, int c,
                                               std::uint64_t seed) {
  require_classes(c);
  require_prob(p, "p");
  Rng rng(derive_seed(seed, {0x51}));
  std::vector<int> preds(labels.size());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] < 0 || labels[v] >= c) throw ConfigError("simulate: label out of range");
    preds[v] = draw_symmetric(rng, labels[v], p, c);
  }
  return preds;
}

std::pair<std::vector<int>, std::vector<int>> simulate_correlated_pair(
    const std::vector<int>& labels, double p, double beta, int c, std::uint64_t seed) {
  require_classes(c);
  require_prob(p, "p");
  require_prob(beta, "beta");
  const double gamma = p < 1.0 ? gamma_from_beta(p, beta) : 1.0;
  Rng rng(derive_seed(seed, {0x52}));
  std::vector<int> first(labels.size()), second(labels.size());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const int label = labels[v];
    if (label < 0 || label >= c) throw ConfigError("simulate: label out of range");
    first[v] = draw_symmetric(rng, label, p, c);
    const double correct_prob = first[v] == label ? beta : gamma;
    if (rng.bernoulli(correct_prob)) {
      second[v] = label;
    } else {
      int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c - 1)));
      second[v] = k >= label ? k + 1 : k;
    }
  }
  return {std::move(first), std::move(second)};
}

double empirical_tna_accuracy(const std::vector<int>& labels, double p, double beta, int c,
                              int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("empirical_tna_accuracy: trials must be >= 1");
  std::int64_t agree = 0, agree_correct = 0;
  for (int t = 0; t < trials; ++t) {
    auto [first, second] =
        simulate_correlated_pair(labels, p, beta, c,
                                 derive_seed(seed, {stage::kTrial, static_cast<std::uint64_t>(t)}));
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (first[v] != second[v]) continue;
      ++agree;
      if (first[v] == labels[v]) ++agree_correct;
    }
  }
  if (agree == 0) return 0.0;
  return static_cast<double>(agree_correct) / static_cast<double>(agree);
}

Graph generate_graph_with_noise(std::int64_t n, int c, std::int64_t m, double alpha,
                                std::uint64_t seed) {
  require_classes(c);
  require_prob(alpha, "alpha");
  if (n < 2 * c) throw ConfigError("generate_graph_with_noise: need at least 2 nodes per class");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) labels[v] = static_cast<int>((v * c) / n);

  const auto want_inter = static_cast<std::int64_t>(std::llround(alpha * static_cast<double>(m)));
  const auto want_intra = m - want_inter;

  Rng rng(derive_seed(seed, {0x53}));
  std::unordered_set<std::uint64_t> used;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  auto sample = [&](bool inter, std::int64_t count) {
    std::int64_t made = 0;
    std::int64_t attempts = 0;
    const std::int64_t attempt_cap = 1000 * (count + 16) + 64 * n;
    while (made < count) {
      if (++attempts > attempt_cap)
        throw ConfigError("generate_graph_with_noise: edge demand too close to the pair pool");
      auto u = static_cast<std::uint32_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      auto v = static_cast<std::uint32_t>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if ((labels[u] != labels[v]) != inter) continue;
      Edge e = make_edge(u, v);
      if (!used.insert(edge_key(e)).second) continue;
      edges.push_back(e);
      ++made;
    }
  };
  sample(false, want_intra);
  sample(true, want_inter);

  return Graph(n, c, std::move(edges), Matrix::Zero(n, 1), std::move(labels));
}

MonteCarloCheck check_deletion(std::int64_t n, int c, std::int64_t m, double alpha, double p,
                               int trials, std::uint64_t seed) {
  if (trials < 2) throw ConfigError("check_deletion: need at least 2 trials");
  Graph graph = generate_graph_with_noise(n, c, m, alpha, seed);
  const auto before = noise_ratio(graph);
  const auto& labels = graph.labels();

  std::vector<double> ratios(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    auto preds = simulate_symmetric_classifier(
        labels, p, c, derive_seed(seed, {stage::kTrial, static_cast<std::uint64_t>(t)}));
    std::int64_t kept_inter = 0, kept_intra = 0;
    for (const auto& e : graph.edges()) {
      if (preds[e.u] != preds[e.v]) continue;  // Alg. 1 keeps equal predictions
      (labels[e.u] != labels[e.v] ? kept_inter : kept_intra)++;
    }
    const auto kept = kept_inter + kept_intra;
    ratios[t] = kept == 0 ? 0.0 : static_cast<double>(kept_inter) / static_cast<double>(kept);
  }

  MonteCarloCheck check;
  check.alpha_before = before.noise_ratio;
  check.closed_form = expected_noise_after_deletion(before.noise_ratio, p, c);
  auto [mean, se] = mean_and_se(ratios);
  check.monte_carlo = mean;
  check.sigma = se;
  check.pass = std::abs(mean - check.closed_form) <= 3.0 * se;
  return check;
}

MonteCarloCheck check_addition(std::int64_t n, int c, std::int64_t m, double alpha, double p,
                               int trials, std::uint64_t seed) {
  if (trials < 2) throw ConfigError("check_addition: need at least 2 trials");
  if (n > 2000) throw ConfigError("check_addition: n too large for the all-pairs loop");
  Graph graph = generate_graph_with_noise(n, c, m, alpha, seed);
  const auto before = noise_ratio(graph);
  const auto& labels = graph.labels();

  std::vector<double> ratios(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    auto preds = simulate_symmetric_classifier(
        labels, p, c, derive_seed(seed, {stage::kTrial, static_cast<std::uint64_t>(t)}));
    std::int64_t added_inter = 0, added_intra = 0;
    for (std::uint32_t u = 0; u + 1 < static_cast<std::uint64_t>(n); ++u) {
      for (std::uint32_t v = u + 1; v < static_cast<std::uint64_t>(n); ++v) {
        if (preds[u] != preds[v] || graph.has_edge(u, v)) continue;
        (labels[u] != labels[v] ? added_inter : added_intra)++;
      }
    }
    ratios[t] = static_cast<double>(before.num_inter + added_inter) /
                static_cast<double>(before.num_edges + added_inter + added_intra);
  }

  MonteCarloCheck check;
  check.alpha_before = before.noise_ratio;
  const double lambda = static_cast<double>(graph.num_edges()) / (static_cast<double>(n) * n);
  check.closed_form = addition_threshold(before.noise_ratio, c, lambda).exact;
  auto [mean, se] = mean_and_se(ratios);
  check.monte_carlo = mean;
  check.sigma = se;
  // Theorem direction: above the accuracy threshold the noise ratio drops.
  check.pass = p > check.closed_form ? mean + 3.0 * se < before.noise_ratio : true;
  return check;
}

MonteCarloCheck check_tna(std::int64_t n, int c, double p, double beta, int trials,
                          std::uint64_t seed) {
  if (n < 1 || trials < 1) throw ConfigError("check_tna: need n >= 1 and trials >= 1");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) labels[v] = static_cast<int>((v * c) / n);

  std::int64_t agree = 0, agree_correct = 0;
  for (int t = 0; t < trials; ++t) {
    auto [first, second] =
        simulate_correlated_pair(labels, p, beta, c,
                                 derive_seed(seed, {stage::kTrial, static_cast<std::uint64_t>(t)}));
    for (std::size_t v = 0; v < labels.size(); ++v) {
      if (first[v] != second[v]) continue;
      ++agree;
      if (first[v] == labels[v]) ++agree_correct;
    }
  }

  MonteCarloCheck check;
  check.closed_form = tna_accuracy_q(p, beta, c);
  check.monte_carlo =
      agree == 0 ? 0.0 : static_cast<double>(agree_correct) / static_cast<double>(agree);
  // Exact binomial band over the pooled agreement count.
  check.sigma = agree == 0 ? 0.0
                           : std::sqrt(check.closed_form * (1.0 - check.closed_form) /
                                       static_cast<double>(agree));
  check.pass = agree > 0 && std::abs(check.monte_carlo - check.closed_form) <= 3.0 * check.sigma;
  return check;
}

}  // namespace seg
