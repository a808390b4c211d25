#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "seg/graph.hpp"

namespace seg {

struct TheoryParams {
  double p = 0.8;      // classifier accuracy, (0,1]
  int c = 2;           // number of classes, >= 2
  double alpha = 0.0;  // noise ratio in [0,1]
  double beta = 0.8;   // P[second model correct | first correct]
  double lambda = 0.0; // edge density m / n^2

  void validate() const;
};

/// P[f(u)=f(v) | l(u)=l(v)] under symmetric error: p^2 + (1-p)^2/(c-1).
double keep_prob_intra(double p, int c);

/// P[f(u)=f(v) | l(u)!=l(v)]: 2p(1-p)/(c-1) + (c-2)(1-p)^2/(c-1)^2.
double keep_prob_inter(double p, int c);

/// Expected noise ratio after deletion: alpha*p_r / (alpha*p_r + (1-alpha)*p_a).
double expected_noise_after_deletion(double alpha, double p, int c);

/// Sufficient condition for deletion to lower the noise ratio: p > 2/(c+1).
bool deletion_improves(double p, int c);

struct AdditionBound {
  double exact = 0.0;            // accuracy above which addition provably helps
  double approx_no_lambda = 0.0; // (alpha + sqrt((c-1)(c-1-c*alpha)))/(c-1)
  double approx_sqrt = 0.0;      // sqrt(1 - alpha)
  bool discriminant_ok = true;
};

AdditionBound addition_threshold(double alpha, int c, double lambda);

/// P[second model correct | first wrong] implied by equal marginals:
/// gamma = p(1-beta)/(1-p). Throws when the result leaves [0,1].
double gamma_from_beta(double p, double beta);

/// Accuracy of the two-model agreement set: q = (c-1)p*beta/(c*p*beta+1-2p).
double tna_accuracy_q(double p, double beta, int c);

/// Per-node draws: correct with probability p, otherwise uniform over the
/// c-1 wrong classes. Deterministic given seed.
std::vector<int> simulate_symmetric_classifier(const std::vector<int>& labels, double p, int c,
                                               std::uint64_t seed);

/// Correlated pair of symmetric classifiers (second drawn conditionally on
/// the first with parameters beta / gamma). Marginal accuracy of both is p.
std::pair<std::vector<int>, std::vector<int>> simulate_correlated_pair(
    const std::vector<int>& labels, double p, double beta, int c, std::uint64_t seed);

/// Fraction of agreement nodes whose shared label is correct, pooled over
/// `trials` repetitions of simulate_correlated_pair.
double empirical_tna_accuracy(const std::vector<int>& labels, double p, double beta, int c,
                              int trials, std::uint64_t seed);

/// Balanced-class graph with exactly round(alpha*m) inter-class edges out of
/// m total, sampled uniformly; features are a zero column (theory harness
/// graphs carry no signal).
Graph generate_graph_with_noise(std::int64_t n, int c, std::int64_t m, double alpha,
                                std::uint64_t seed);

/// One closed-form-vs-simulation comparison.
struct MonteCarloCheck {
  double closed_form = 0.0;
  double monte_carlo = 0.0;
  double sigma = 0.0;      // one standard error of the Monte-Carlo estimate
  bool pass = false;
  double alpha_before = 0.0;  // deletion / addition checks only
};

/// Simulates edge deletion under symmetric error on exact-noise graphs
/// and compares the mean post-deletion noise ratio against the closed form
/// (pass at 3 sigma, sample standard error over trials).
MonteCarloCheck check_deletion(std::int64_t n, int c, std::int64_t m, double alpha, double p,
                               int trials, std::uint64_t seed);

/// Simulates all-pairs edge addition under symmetric error; closed_form holds
/// the exact accuracy threshold and pass verifies the claimed direction
/// (noise drops when p exceeds it; vacuous otherwise).
MonteCarloCheck check_addition(std::int64_t n, int c, std::int64_t m, double alpha, double p,
                               int trials, std::uint64_t seed);

/// Compares empirical two-model agreement accuracy against tna_accuracy_q
/// with an exact binomial 3 sigma band over the pooled agreement count.
MonteCarloCheck check_tna(std::int64_t n, int c, double p, double beta, int trials,
                          std::uint64_t seed);

}  // namespace seg
