#pragma once

#include <span>
#include <vector>

namespace lpbias::stats {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);

double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n - 2 degrees of freedom
};

// Spearman's rho as the Pearson correlation of average ranks. Throws
// UndefinedCorrelationError for a constant input and ValidationError for
// mismatched or too-short (< 3) inputs.
Correlation spearman(std::span<const double> x, std::span<const double> y);

double correlation_t_pvalue(double r, std::size_t n);

}  // namespace lpbias::stats
