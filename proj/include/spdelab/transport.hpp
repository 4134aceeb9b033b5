#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spdelab/field.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

enum class CloudMetric { SupNorm, L2Norm, Euclidean };

// Equal-weight empirical measure on a metric space: trajectories compared in
// the sup or L2 path norm on a shared grid, or plain vectors with the
// Euclidean metric (unit tests, external point clouds).
struct SampleCloud {
    CloudMetric metric = CloudMetric::Euclidean;
    Grid grid; // used by path metrics
    std::vector<std::vector<double>> points;

    static SampleCloud from_paths(std::span<const FieldPath> paths, CloudMetric metric);
    static SampleCloud from_vectors(std::vector<std::vector<double>> vectors);

    std::size_t size() const { return points.size(); }
    std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

double cloud_distance(const SampleCloud& a, std::size_t i, const SampleCloud& b, std::size_t j);

struct TransportResult {
    double w2 = 0.0;
    std::string method;  // "exact-assignment", "entropic", "coupling-upper-bound"
    double epsilon = 0.0;
    double dual_gap = 0.0; // w2 units; ot cost lies within [w2 - gap, w2]
    int iterations = 0;
};

inline constexpr std::size_t kExactAssignmentCap = 512;

// Exact W2 between equal-size empirical measures: optimal assignment on the
// squared-distance cost (Jonker-Volgenant shortest augmenting paths, O(n^3)).
TransportResult wasserstein2_exact(const SampleCloud& a, const SampleCloud& b);

struct SinkhornOptions {
    double marginal_tol = 1e-9; // largest deviation of any marginal mass
    int max_iterations = 200000;
    bool anneal = true; // start at a large epsilon and halve down to the target
};

// Entropic-regularized OT via log-domain alternating scaling with epsilon
// annealing; the final plan is rounded to exact marginals. Reports the sharp
// plan cost (without the entropy term) and a feasibility-certified dual gap,
// so exact <= w2 and exact >= w2 - dual_gap. A marginal residual beyond
// 1e-3 of the weights after the iteration budget is a numeric error.
TransportResult wasserstein2_entropic(const SampleCloud& a, const SampleCloud& b, double epsilon,
                                      const SinkhornOptions& opts = {});

// Any coupling upper-bounds the Wasserstein infimum: sqrt(mean rho(u,v)^2)
// over Girsanov-coupled pairs, with a bootstrap CI.
Interval coupling_upper_bound(std::span<const FieldPath> u, std::span<const FieldPath> v,
                              CloudMetric metric, int resamples = 1000, std::uint64_t seed = 13);

struct ConcentrationProfile {
    double c = 0.0;
    double r0 = 0.0;
    std::vector<double> a_grid, mgf_emp, mgf_se, mgf_bnd;
    std::vector<double> r_grid, tail_emp, tail_se, tail_bnd;
    bool mgf_ok = true;  // empirical MGF <= bound within 2 bootstrap SE on the grid
    bool tail_ok = true; // empirical tail <= bound within 2 SE for r >= r0
};

// Empirical MGF of centered 1-Lipschitz values against exp(a^2 C / 2), and
// empirical tails beyond the median against exp(-r^2/(8C)) for r >= r0.
ConcentrationProfile concentration_profile(std::span<const double> f_values, double c,
                                           int resamples = 1000, std::uint64_t seed = 17);

} // namespace spdelab
