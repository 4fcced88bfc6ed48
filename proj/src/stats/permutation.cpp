#include "lpbias/stats/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lpbias/error.hpp"
#include "lpbias/stats/random.hpp"

namespace lpbias::stats {

void validate(const PermutationConfig& config) {
  if (config.exact_threshold == 0) throw ValidationError("exact-threshold must be positive");
  if (config.monte_carlo_samples == 0) throw ValidationError("monte-carlo-samples must be positive");
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("mean of an empty sequence");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_sd(std::span<const double> v) {
  double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double mean_difference(std::span<const double> a, std::span<const double> b) {
  return mean(a) - mean(b);
}

std::optional<std::uint64_t> binomial(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // result * (n - k + i) / i stays integral at every step.
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > cap) return std::nullopt;
  }
  return static_cast<std::uint64_t>(r);
}

bool exceeds(double candidate, double observed, double scale) {
  return candidate - observed > 1e-12 * std::max(scale, 1e-300);
}

PermutationResult permutation_pvalue(std::span<const double> a, std::span<const double> b,
                                     const SplitStatistic& statistic,
                                     const PermutationConfig& config) {
  validate(config);
  if (a.empty() || b.empty()) throw ValidationError("permutation test needs two nonempty groups");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t na = a.size();

  PermutationResult result;
  result.observed = statistic(a, b);
  double scale = std::abs(result.observed);
  for (double v : pooled) scale = std::max(scale, std::abs(v));

  std::vector<double> ga(na), gb(n - na);
  auto splits = binomial(n, na, config.exact_threshold);

  if (splits) {
    // Lexicographic walk over all na-subsets of [0, n).
    std::vector<std::size_t> comb(na);
    std::iota(comb.begin(), comb.end(), 0);
    std::uint64_t total = 0;
    std::uint64_t greater = 0;
    std::vector<char> in_a(n);
    while (true) {
      std::fill(in_a.begin(), in_a.end(), 0);
      for (auto i : comb) in_a[i] = 1;
      std::size_t ia = 0, ib = 0;
      for (std::size_t i = 0; i < n; ++i) (in_a[i] ? ga[ia++] : gb[ib++]) = pooled[i];
      ++total;
      if (exceeds(statistic(ga, gb), result.observed, scale)) ++greater;

      std::size_t i = na;
      while (i > 0 && comb[i - 1] == n - na + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < na; ++j) comb[j] = comb[j - 1] + 1;
    }
    result.exact = true;
    result.n_used = total;
    result.p_value = static_cast<double>(greater) / static_cast<double>(total);
    return result;
  }

  std::uint64_t greater = 0;
  std::vector<double> shuffled(n);
  for (std::uint64_t s = 0; s < config.monte_carlo_samples; ++s) {
    auto rng = Rng::stream(config.seed, s);
    shuffled = pooled;
    rng.shuffle(shuffled);
    std::copy_n(shuffled.begin(), na, ga.begin());
    std::copy(shuffled.begin() + static_cast<std::ptrdiff_t>(na), shuffled.end(), gb.begin());
    if (exceeds(statistic(ga, gb), result.observed, scale)) ++greater;
  }
  result.exact = false;
  result.n_used = config.monte_carlo_samples;
  result.p_value = static_cast<double>(greater + 1) /
                   static_cast<double>(config.monte_carlo_samples + 1);
  return result;
}

}  // namespace lpbias::stats
