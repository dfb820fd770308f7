#pragma once

#include <functional>
#include <span>

namespace harnack::stats {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// One-sample two-sided KS test against a continuous CDF.
KsResult ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);

/// Two-sample two-sided KS test.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
double quantile(std::span<const double> sorted, double q);

}  // namespace harnack::stats
