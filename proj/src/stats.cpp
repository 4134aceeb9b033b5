#include "spdelab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "spdelab/errors.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return pairwise_sum(x) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    const double m = mean(x);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - m) * (x[i] - m);
    return pairwise_sum(sq) / static_cast<double>(n - 1);
}

double sample_covariance(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    const double mx = mean(x.first(n));
    const double my = mean(y.first(n));
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    return pairwise_sum(prod) / static_cast<double>(n - 1);
}

double standard_error(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

namespace {

double percentile(std::vector<double>& sorted_values, double q) {
    // linear interpolation between order statistics
    const std::size_t n = sorted_values.size();
    if (n == 0) return 0.0;
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

} // namespace

Interval bootstrap_ci(std::size_t n_replicas,
                      const std::function<double(std::span<const std::size_t>)>& stat,
                      int resamples, std::uint64_t seed) {
    Interval out;
    std::vector<std::size_t> full(n_replicas);
    for (std::size_t i = 0; i < n_replicas; ++i) full[i] = i;
    out.estimate = stat(full);
    if (n_replicas < 2 || resamples < 2) {
        out.lo = out.hi = out.upper95 = out.estimate;
        return out;
    }
    const CounterRng rng(SeedSpec{seed, 0xb00757f4aULL});
    std::vector<double> vals(static_cast<std::size_t>(resamples));
    std::vector<std::size_t> idx(n_replicas);
    std::uint64_t counter = 0;
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < n_replicas; ++i) {
            idx[i] = static_cast<std::size_t>(rng.bits(counter++) % n_replicas);
        }
        vals[static_cast<std::size_t>(b)] = stat(idx);
    }
    const double m = mean(vals);
    double var = 0.0;
    for (double v : vals) var += (v - m) * (v - m);
    out.se = std::sqrt(var / static_cast<double>(resamples - 1));
    std::sort(vals.begin(), vals.end());
    out.lo = percentile(vals, 0.025);
    out.hi = percentile(vals, 0.975);
    out.upper95 = percentile(vals, 0.95);
    return out;
}

Interval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed) {
    std::vector<double> copy(values.begin(), values.end());
    return bootstrap_ci(
        copy.size(),
        [&copy](std::span<const std::size_t> idx) {
            std::vector<double> sel(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) sel[i] = copy[idx[i]];
            return mean(sel);
        },
        resamples, seed);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
    if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double n = static_cast<double>(a.size());
    const double m = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
        if (a[ia] <= b[ib]) ++ia; else ++ib;
        const double fa = static_cast<double>(ia) / n;
        const double fb = static_cast<double>(ib) / m;
        d = std::max(d, std::abs(fa - fb));
    }
    double c;
    if (alpha <= 0.01) c = 1.628;
    else if (alpha <= 0.05) c = 1.358;
    else c = 1.224;
    KsResult r;
    r.statistic = d;
    r.threshold = c * std::sqrt((n + m) / (n * m));
    r.reject = d > r.threshold;
    return r;
}

double chi_square_quantile(double p, int dof) {
    if (dof < 1) throw DomainError("chi_square_quantile: dof must be >= 1");
    // normal quantile via Acklam rational approximation
    auto norm_q = [](double q) {
        static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
        static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
        static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
        static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
        const double plow = 0.02425;
        if (q < plow) {
            const double u = std::sqrt(-2.0 * std::log(q));
            return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
                   ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
        }
        if (q > 1.0 - plow) {
            const double u = std::sqrt(-2.0 * std::log(1.0 - q));
            return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
                   ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
        }
        const double u = q - 0.5;
        const double t = u * u;
        return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
               (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    };
    const double k = static_cast<double>(dof);
    const double z = norm_q(p);
    const double h = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * h * h * h; // Wilson-Hilferty
}

} // namespace spdelab
