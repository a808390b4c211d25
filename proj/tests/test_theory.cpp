#include <doctest.h>

#include <cmath>

#include "seg/common.hpp"
#include "seg/rng.hpp"
#include "seg/theory.hpp"

using namespace seg;

namespace {

/// Independent Monte-Carlo oracle for the pair-keeping probabilities: draws
/// two symmetric-error predictions and counts agreement.
double mc_keep_prob(bool same_class, double p, int c, std::int64_t trials, std::uint64_t seed) {
  Rng rng(seed);
  std::int64_t equal = 0;
  const int label_u = 0;
  const int label_v = same_class ? 0 : 1;
  auto draw = [&](int label) {
    if (rng.uniform() < p) return label;
    int k = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c - 1)));
    return k >= label ? k + 1 : k;
  };
  for (std::int64_t t = 0; t < trials; ++t)
    if (draw(label_u) == draw(label_v)) ++equal;
  return static_cast<double>(equal) / static_cast<double>(trials);
}

std::vector<int> uniform_labels(std::int64_t n, int c) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (std::int64_t v = 0; v < n; ++v) labels[v] = static_cast<int>((v * c) / n);
  return labels;
}

}  // namespace

TEST_CASE("keep probabilities: closed forms") {
  CHECK(keep_prob_intra(1.0, 5) == doctest::Approx(1.0));
  CHECK(keep_prob_intra(0.5, 2) == doctest::Approx(0.5));
  CHECK(keep_prob_intra(0.8, 7) == doctest::Approx(0.64 + 0.04 / 6.0));

  CHECK(keep_prob_inter(1.0, 5) == doctest::Approx(0.0));
  CHECK(keep_prob_inter(0.5, 2) == doctest::Approx(0.5));
  CHECK(keep_prob_inter(0.8, 7) == doctest::Approx(0.32 / 6.0 + 5.0 * 0.04 / 36.0));

  CHECK_THROWS_AS(keep_prob_intra(0.5, 1), ConfigError);
}

TEST_CASE("keep probabilities: Monte-Carlo cross-check") {
  const std::int64_t trials = 1'000'000;
  for (auto [p, c] : std::vector<std::pair<double, int>>{{0.8, 7}, {0.5, 2}, {0.6, 5}}) {
    double pa = keep_prob_intra(p, c);
    double sigma_a = std::sqrt(pa * (1.0 - pa) / trials);
    CHECK(std::abs(mc_keep_prob(true, p, c, trials, 77) - pa) <= 3.0 * sigma_a);

    double pr = keep_prob_inter(p, c);
    double sigma_r = std::sqrt(pr * (1.0 - pr) / trials);
    CHECK(std::abs(mc_keep_prob(false, p, c, trials, 78) - pr) <= 3.0 * sigma_r);
  }
}

TEST_CASE("expected noise after deletion") {
  CHECK(expected_noise_after_deletion(0.5, 1.0, 4) == doctest::Approx(0.0));
  CHECK(expected_noise_after_deletion(0.0, 0.7, 4) == doctest::Approx(0.0));
  // alpha=0.19, p=0.8, c=7: frozen from the closed forms above
  CHECK(expected_noise_after_deletion(0.19, 0.8, 7) == doctest::Approx(0.020914).epsilon(1e-3));
}

TEST_CASE("deletion improvement bound") {
  CHECK(deletion_improves(0.34, 5));        // threshold 1/3
  CHECK_FALSE(deletion_improves(2.0 / 6.0, 5));  // boundary is strict
  CHECK_FALSE(deletion_improves(0.5, 2));   // threshold 2/3
}

TEST_CASE("deletion direction at the formula level") {
  // The bound p > 2/(c+1) is sufficient: above it the closed form always
  // improves. The formula-level identity is p_a - p_r = (p - (1-p)/(c-1))^2,
  // so strict improvement holds exactly when p != 1/c.
  for (int c : {2, 3, 5, 7, 10}) {
    for (double p = 0.05; p < 1.0; p += 0.05) {
      for (double alpha : {0.1, 0.3, 0.7}) {
        double after = expected_noise_after_deletion(alpha, p, c);
        if (deletion_improves(p, c)) CHECK(after < alpha);
        if (std::abs(p - 1.0 / c) > 1e-9)
          CHECK(after < alpha);
        else
          CHECK(after == doctest::Approx(alpha));
      }
    }
    double boundary = 1.0 / c;
    CHECK(expected_noise_after_deletion(0.4, boundary, c) == doctest::Approx(0.4));
  }
}

TEST_CASE("intra agreement dominates inter agreement above chance") {
  for (int c : {2, 3, 5, 7}) {
    for (double p = 1.0 / c; p <= 1.0; p += 0.01) {
      CHECK(keep_prob_intra(p, c) >= keep_prob_inter(p, c) - 1e-12);
      CHECK(keep_prob_intra(p, c) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("addition threshold") {
  auto bound = addition_threshold(0.0, 5, 0.0);
  CHECK(bound.exact == doctest::Approx(1.0));  // algebraic simplification
  CHECK(bound.discriminant_ok);

  CHECK(addition_threshold(0.19, 4, 0.0).approx_sqrt == doctest::Approx(0.9));

  // In the regime the simplifications assume (small lambda, small
  // alpha/(c-1)) both approximations track the exact bound tightly. The
  // ordering flips with c, so only closeness can be asserted.
  for (int c : {5, 7, 10}) {
    for (double alpha : {0.05, 0.1, 0.2}) {
      for (double lambda : {0.0, 0.001, 0.005}) {
        auto b = addition_threshold(alpha, c, lambda);
        CHECK(b.discriminant_ok);
        CHECK(std::abs(b.exact - b.approx_no_lambda) <= 0.03 * b.exact);
        CHECK(std::abs(b.exact - b.approx_sqrt) <= 0.03 * b.exact);
      }
    }
  }
}

TEST_CASE("gamma from beta") {
  CHECK(gamma_from_beta(0.8, 0.8) == doctest::Approx(0.8));  // independence
  CHECK(gamma_from_beta(0.7, 1.0) == doctest::Approx(0.0));
  CHECK(gamma_from_beta(0.8, 0.9) == doctest::Approx(0.4));
  CHECK_THROWS_AS(gamma_from_beta(0.9, 0.05), ConfigError);  // gamma > 1
}

TEST_CASE("tna accuracy closed form") {
  CHECK(tna_accuracy_q(1.0, 1.0, 7) == doctest::Approx(1.0));
  CHECK(tna_accuracy_q(0.8, 0.8, 7) == doctest::Approx(3.84 / 3.88));
  CHECK(tna_accuracy_q(0.8, 0.9, 7) == doctest::Approx(4.32 / 4.44));

  // q >= p across the theorem's regime
  for (int c : {2, 3, 7}) {
    for (double p = 0.55; p < 1.0; p += 0.05) {
      for (double beta = p; beta <= 1.0; beta += 0.05)
        CHECK(tna_accuracy_q(p, beta, c) >= p - 1e-12);
    }
  }

  // q decreases in beta for p > 1/2 (finite differences over a grid)
  for (int c : {2, 5, 7}) {
    for (double p : {0.55, 0.7, 0.9}) {
      for (double beta = p; beta + 0.02 <= 1.0; beta += 0.02)
        CHECK(tna_accuracy_q(p, beta + 0.02, c) <= tna_accuracy_q(p, beta, c) + 1e-12);
    }
  }
}

TEST_CASE("symmetric classifier simulator") {
  auto labels = uniform_labels(2000, 4);
  CHECK(simulate_symmetric_classifier(labels, 1.0, 4, 1) == labels);

  auto flipped = simulate_symmetric_classifier(uniform_labels(100, 2), 0.0, 2, 1);
  auto two = uniform_labels(100, 2);
  for (std::size_t v = 0; v < two.size(); ++v) CHECK(flipped[v] == 1 - two[v]);

  const std::int64_t n = 100'000;
  auto big = uniform_labels(n, 6);
  auto preds = simulate_symmetric_classifier(big, 0.8, 6, 5);
  std::int64_t correct = 0;
  for (std::int64_t v = 0; v < n; ++v)
    if (preds[v] == big[v]) ++correct;
  double sigma = std::sqrt(0.8 * 0.2 / n);
  CHECK(std::abs(correct / static_cast<double>(n) - 0.8) <= 3.0 * sigma);

  // determinism
  CHECK(simulate_symmetric_classifier(big, 0.8, 6, 5) == preds);

  // wrong classes are hit uniformly
  std::vector<std::int64_t> wrong_counts(6, 0);
  for (std::int64_t v = 0; v < n; ++v)
    if (preds[v] != big[v]) wrong_counts[preds[v]]++;
  std::int64_t wrong_total = n - correct;
  for (int k = 0; k < 6; ++k) {
    // each class is the wrong pick for 5/6 of nodes, uniformly across the 5
    double expected = static_cast<double>(wrong_total) / 6.0;
    CHECK(std::abs(wrong_counts[k] - expected) <= 5.0 * std::sqrt(expected));
  }
}

TEST_CASE("correlated pair simulator") {
  const std::int64_t n = 200'000;
  auto labels = uniform_labels(n, 5);

  SUBCASE("beta = 1 chains correctness") {
    auto [first, second] = simulate_correlated_pair(labels, 0.8, 1.0, 5, 3);
    for (std::int64_t v = 0; v < n; ++v)
      if (first[v] == labels[v]) CHECK(second[v] == labels[v]);
  }

  SUBCASE("marginal accuracy of the second model is p") {
    for (double beta : {0.8, 0.9, 1.0}) {
      auto [first, second] = simulate_correlated_pair(labels, 0.8, beta, 5, 4);
      std::int64_t correct = 0;
      for (std::int64_t v = 0; v < n; ++v)
        if (second[v] == labels[v]) ++correct;
      double sigma = std::sqrt(0.8 * 0.2 / n);
      CHECK(std::abs(correct / static_cast<double>(n) - 0.8) <= 3.0 * sigma);
    }
  }

  SUBCASE("beta = p reproduces independence") {
    auto [first, second] = simulate_correlated_pair(labels, 0.8, 0.8, 5, 6);
    std::int64_t cond = 0, base = 0;
    for (std::int64_t v = 0; v < n; ++v) {
      if (first[v] != labels[v]) continue;
      ++base;
      if (second[v] == labels[v]) ++cond;
    }
    double sigma = std::sqrt(0.8 * 0.2 / base);
    CHECK(std::abs(cond / static_cast<double>(base) - 0.8) <= 3.0 * sigma);
  }
}

TEST_CASE("empirical tna accuracy matches the closed form") {
  auto labels = uniform_labels(100'000, 7);
  CHECK(empirical_tna_accuracy(labels, 1.0, 1.0, 7, 1, 2) == doctest::Approx(1.0));

  for (auto [p, beta] : std::vector<std::pair<double, double>>{{0.8, 0.8}, {0.8, 0.9}}) {
    auto check = check_tna(100'000, 7, p, beta, 10, 11);
    CHECK(check.pass);
    CHECK(check.sigma > 0.0);
    CHECK(std::abs(check.monte_carlo - check.closed_form) <= 3.0 * check.sigma);
  }
}

TEST_CASE("deletion Monte-Carlo matches the closed form") {
  auto check = check_deletion(1000, 7, 5000, 0.19, 0.8, 30, 21);
  CHECK(check.alpha_before == doctest::Approx(0.19).epsilon(1e-6));
  CHECK(check.closed_form == doctest::Approx(0.020914).epsilon(1e-3));
  CHECK(check.pass);
}

TEST_CASE("addition Monte-Carlo respects the theorem direction") {
  // p far above the exact threshold: noise must drop
  auto strong = check_addition(200, 5, 1000, 0.3, 0.95, 20, 31);
  CHECK(strong.closed_form < 0.95);
  CHECK(strong.pass);
  CHECK(strong.monte_carlo < strong.alpha_before);
}

TEST_CASE("exact-noise generator") {
  Graph g = generate_graph_with_noise(400, 5, 2000, 0.25, 9);
  auto report = noise_ratio(g);
  CHECK(report.num_edges == 2000);
  CHECK(report.num_inter == 500);
  CHECK(report.noise_ratio == doctest::Approx(0.25));
  // deterministic
  Graph g2 = generate_graph_with_noise(400, 5, 2000, 0.25, 9);
  CHECK(g2.edges() == g.edges());
}
