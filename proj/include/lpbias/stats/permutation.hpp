#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

namespace lpbias::stats {

struct PermutationConfig {
  std::uint64_t exact_threshold = 200'000;
  std::uint64_t monte_carlo_samples = 10'000;
  std::uint64_t seed = 1;
};

void validate(const PermutationConfig& config);

struct PermutationResult {
  double p_value = 1.0;
  bool exact = true;
  std::uint64_t n_used = 0;  // splits enumerated, or Monte Carlo samples drawn
  double observed = 0.0;
};

// Statistic over one split of the pooled values into (group a, group b).
using SplitStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

double mean(std::span<const double> v);
double population_sd(std::span<const double> v);
double mean_difference(std::span<const double> a, std::span<const double> b);

// C(n, k), or nullopt when it exceeds `cap`.
std::optional<std::uint64_t> binomial(std::uint64_t n, std::uint64_t k,
                                      std::uint64_t cap = UINT64_MAX);

// Strict "candidate > observed". Differences within 1e-12 of `scale` count
// as ties, so re-associated floating sums of an equal split never exceed.
bool exceeds(double candidate, double observed, double scale);

// One-sided p = Pr[statistic(re-split) > statistic(observed split)] over all
// re-splits of a ∪ b into groups of the original sizes. Exact enumeration
// when the split count is at most exact_threshold; otherwise Monte Carlo
// with the (b + 1) / (m + 1) estimator. Sample i draws from
// Rng::stream(seed, i), so the estimate does not depend on scheduling.
PermutationResult permutation_pvalue(std::span<const double> a, std::span<const double> b,
                                     const SplitStatistic& statistic,
                                     const PermutationConfig& config);

}  // namespace lpbias::stats
