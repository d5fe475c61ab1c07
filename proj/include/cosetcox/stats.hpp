#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cosetcox::stats {

/// Upper tail P[chi2_df > x].
double chi2_sf(double x, double df);

double normal_cdf(double z);
/// Two-sided p-value of a standard normal z-score.
double normal_two_sided(double z);

double poisson_pmf(std::size_t k, double mean);
/// P[N >= k] for N ~ Poisson(mean).
double poisson_sf(std::size_t k, double mean);

/// Exact total variation distance between Poisson(a) and Poisson(b).
double poisson_tv(double a, double b);

/// One-sample Kolmogorov-Smirnov test against Unif[0, 1].
struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};
KsResult ks_uniform(std::span<const double> sample);

/// Mean and standard error of the mean.
struct MeanSe {
    double mean = 0.0;
    double std_error = 0.0;
    double sd = 0.0;
};
MeanSe mean_se(std::span<const double> x);

}  // namespace cosetcox::stats
