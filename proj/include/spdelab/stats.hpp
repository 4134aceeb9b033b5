#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spdelab {

// Fixed-order pairwise summation. All replica reductions go through this so
// results do not depend on thread count or schedule.
double pairwise_sum(std::span<const double> x);

double mean(std::span<const double> x);
// Unbiased sample variance.
double sample_variance(std::span<const double> x);
double sample_covariance(std::span<const double> x, std::span<const double> y);
// Standard error of the mean.
double standard_error(std::span<const double> x);

struct Interval {
    double estimate = 0.0;
    double lo = 0.0;       // 2.5% percentile
    double hi = 0.0;       // 97.5% percentile
    double upper95 = 0.0;  // one-sided 95% upper bound
    double se = 0.0;       // bootstrap standard error
};

// Nonparametric bootstrap of an arbitrary replica-level statistic.
// stat maps a resampled index set (indices into the replica axis) to a value.
// Deterministic in (seed, resamples).
Interval bootstrap_ci(std::size_t n_replicas,
                      const std::function<double(std::span<const std::size_t>)>& stat,
                      int resamples, std::uint64_t seed);

// Convenience: bootstrap CI of the mean of a vector of replica values.
Interval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed);

struct KsResult {
    double statistic = 0.0; // sup |F_n - G_m|
    double threshold = 0.0; // rejection threshold at the requested level
    bool reject = false;
};

// Two-sample Kolmogorov-Smirnov test. Supported levels: 0.10, 0.05, 0.01.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha);

// Upper quantile of the chi-square distribution (Wilson-Hilferty approximation).
double chi_square_quantile(double p, int dof);

} // namespace spdelab
