#include "spdelab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spdelab/errors.hpp"

namespace spdelab {

SampleCloud SampleCloud::from_paths(std::span<const FieldPath> paths, CloudMetric metric) {
    if (metric == CloudMetric::Euclidean)
        throw ConfigError("SampleCloud::from_paths: use a path metric for trajectories");
    SampleCloud c;
    c.metric = metric;
    if (paths.empty()) return c;
    c.grid = paths.front().grid;
    c.points.reserve(paths.size());
    for (const FieldPath& p : paths) {
        if (!same_grid(p.grid, c.grid))
            throw ConfigError("SampleCloud::from_paths: paths on different grids");
        c.points.push_back(p.v);
    }
    return c;
}

SampleCloud SampleCloud::from_vectors(std::vector<std::vector<double>> vectors) {
    SampleCloud c;
    c.metric = CloudMetric::Euclidean;
    c.points = std::move(vectors);
    for (const auto& p : c.points)
        if (p.size() != c.points.front().size())
            throw ConfigError("SampleCloud::from_vectors: mixed dimensions");
    return c;
}

double cloud_distance(const SampleCloud& a, std::size_t i, const SampleCloud& b, std::size_t j) {
    const std::vector<double>& p = a.points[i];
    const std::vector<double>& q = b.points[j];
    if (p.size() != q.size()) throw ConfigError("cloud_distance: dimension mismatch");
    switch (a.metric) {
        case CloudMetric::SupNorm: {
            double m = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) m = std::max(m, std::abs(p[k] - q[k]));
            return m;
        }
        case CloudMetric::L2Norm: {
            // matches l2_norm_diff: right rule in time, left rule in space
            const Grid& g = a.grid;
            double acc = 0.0;
            for (int it = 1; it <= g.nt; ++it)
                for (int jx = 0; jx < g.nx; ++jx) {
                    const std::size_t idx = static_cast<std::size_t>(it) * (g.nx + 1) + jx;
                    const double d = p[idx] - q[idx];
                    acc += d * d;
                }
            return std::sqrt(acc * g.dt * g.dx);
        }
        case CloudMetric::Euclidean: {
            double acc = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double d = p[k] - q[k];
                acc += d * d;
            }
            return std::sqrt(acc);
        }
    }
    return 0.0;
}

namespace {

void check_compatible(const SampleCloud& a, const SampleCloud& b) {
    if (a.metric != b.metric)
        throw ConfigError("transport: clouds carry different metrics");
    if (a.metric != CloudMetric::Euclidean && !same_grid(a.grid, b.grid))
        throw ConfigError("transport: path clouds live on different grids");
    if (a.dim() != b.dim()) throw ConfigError("transport: dimension mismatch");
}

// squared-distance cost matrix, rows parallel
std::vector<double> cost_matrix(const SampleCloud& a, const SampleCloud& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> cost(n * m);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = cloud_distance(a, i, b, j);
            cost[i * m + j] = d * d;
        }
    });
    return cost;
}

// Jonker-Volgenant style shortest augmenting path assignment; returns the
// minimal total cost over perfect matchings.
double solve_assignment(const std::vector<double>& cost, std::size_t n) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0); // match[j]: row assigned to column j (1-based)
    std::vector<std::size_t> way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
    return total;
}

} // namespace

TransportResult wasserstein2_exact(const SampleCloud& a, const SampleCloud& b) {
    if (a.size() != b.size()) {
        std::ostringstream msg;
        msg << "wasserstein2_exact: clouds must have equal size (" << a.size() << " vs "
            << b.size() << ")";
        throw ConfigError(msg.str());
    }
    if (a.size() == 0) throw ConfigError("wasserstein2_exact: empty clouds");
    check_compatible(a, b);
    if (a.size() > kExactAssignmentCap) {
        std::ostringstream msg;
        msg << "wasserstein2_exact: n = " << a.size() << " exceeds the cap "
            << kExactAssignmentCap << "; use wasserstein2_entropic";
        throw ConfigError(msg.str());
    }
    const std::size_t n = a.size();
    const std::vector<double> cost = cost_matrix(a, b);
    TransportResult res;
    res.method = "exact-assignment";
    res.w2 = std::sqrt(solve_assignment(cost, n) / static_cast<double>(n));
    return res;
}

TransportResult wasserstein2_entropic(const SampleCloud& a, const SampleCloud& b, double epsilon,
                                      const SinkhornOptions& opts) {
    if (!(epsilon > 0.0)) throw DomainError("wasserstein2_entropic: epsilon must be positive");
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 || m == 0) throw ConfigError("wasserstein2_entropic: empty clouds");
    check_compatible(a, b);
    const std::vector<double> cost = cost_matrix(a, b);
    const double cmax = *std::max_element(cost.begin(), cost.end());

    const double mu = 1.0 / static_cast<double>(n);
    const double nu = 1.0 / static_cast<double>(m);
    std::vector<double> f(n, 0.0), g(m, 0.0);

    auto lse_row = [&](std::size_t i, double eps) {
        // -eps * log sum_j nu exp((g_j - C_ij)/eps)
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j)
            best = std::max(best, (g[j] - cost[i * m + j]));
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            acc += std::exp(((g[j] - cost[i * m + j]) - best) / eps);
        return -(best + eps * std::log(nu * acc));
    };
    auto lse_col = [&](std::size_t j, double eps) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            best = std::max(best, (f[i] - cost[i * m + j]));
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += std::exp(((f[i] - cost[i * m + j]) - best) / eps);
        return -(best + eps * std::log(mu * acc));
    };

    // largest deviation of any single marginal mass from its target
    auto marginal_violation = [&](double eps) {
        double viol = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                row += std::exp((f[i] + g[j] - cost[i * m + j]) / eps) * mu * nu;
            viol = std::max(viol, std::abs(row - mu));
        }
        for (std::size_t j = 0; j < m; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                col += std::exp((f[i] + g[j] - cost[i * m + j]) / eps) * mu * nu;
            viol = std::max(viol, std::abs(col - nu));
        }
        return viol;
    };

    int iterations = 0;
    double eps = opts.anneal ? std::max(epsilon, 0.2 * (cmax > 0.0 ? cmax : 1.0)) : epsilon;
    while (true) {
        const bool last_stage = eps <= epsilon * (1.0 + 1e-12);
        const int stage_iters = last_stage ? opts.max_iterations : 50;
        double last_viol = std::numeric_limits<double>::infinity();
        for (int it = 0; it < stage_iters; ++it) {
            for (std::size_t i = 0; i < n; ++i) f[i] = lse_row(i, eps);
            for (std::size_t j = 0; j < m; ++j) g[j] = lse_col(j, eps);
            ++iterations;
            if (last_stage && it % 10 == 9) {
                const double viol = marginal_violation(eps);
                if (viol < opts.marginal_tol) break;
                // tiny-epsilon stagnation: the rounding step below restores
                // feasibility and the dual gap certifies the cost
                if (viol > 0.995 * last_viol) break;
                last_viol = viol;
            }
            if (iterations >= opts.max_iterations) break;
        }
        if (last_stage || iterations >= opts.max_iterations) break;
        eps = std::max(epsilon, eps * 0.5);
    }
    const double residual = marginal_violation(epsilon);
    if (!std::isfinite(residual) || residual > 1e-3 * std::min(mu, nu)) {
        std::ostringstream msg;
        msg << "wasserstein2_entropic: no convergence after " << iterations
            << " iterations (marginal violation " << residual << ")";
        throw NumericError(msg.str());
    }

    // round the near-feasible plan to exact marginals; the cost shift is
    // bounded by the residual times the cost range
    std::vector<double> plan(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            plan[i * m + j] = std::exp((f[i] + g[j] - cost[i * m + j]) / epsilon) * mu * nu;
    {
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) row += plan[i * m + j];
            const double scale = row > 0.0 ? std::min(1.0, mu / row) : 0.0;
            for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= scale;
        }
        std::vector<double> col(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) col[j] += plan[i * m + j];
        for (std::size_t j = 0; j < m; ++j) {
            const double scale = col[j] > 0.0 ? std::min(1.0, nu / col[j]) : 0.0;
            for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= scale;
        }
        std::vector<double> err_r(n, 0.0), err_c(m, nu);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                row += plan[i * m + j];
                err_c[j] -= plan[i * m + j];
            }
            err_r[i] = mu - row;
            total += err_r[i];
        }
        if (total > 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    plan[i * m + j] += err_r[i] * err_c[j] / total;
        }
    }
    double plan_cost = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) plan_cost += plan[i * m + j] * cost[i * m + j];

    // feasible dual certificate via the c-transform of f
    double dual = 0.0;
    for (std::size_t i = 0; i < n; ++i) dual += mu * f[i];
    for (std::size_t j = 0; j < m; ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) best = std::min(best, cost[i * m + j] - f[i]);
        dual += nu * best;
    }

    TransportResult res;
    res.method = "entropic";
    res.epsilon = epsilon;
    res.iterations = iterations;
    res.w2 = std::sqrt(std::max(0.0, plan_cost));
    res.dual_gap = res.w2 - std::sqrt(std::max(0.0, dual));
    return res;
}

Interval coupling_upper_bound(std::span<const FieldPath> u, std::span<const FieldPath> v,
                              CloudMetric metric, int resamples, std::uint64_t seed) {
    if (u.size() != v.size() || u.empty())
        throw ConfigError("coupling_upper_bound: need matched nonempty path lists");
    std::vector<double> rho2(u.size());
    for (std::size_t r = 0; r < u.size(); ++r) {
        double d = 0.0;
        if (metric == CloudMetric::SupNorm) {
            for (std::size_t k = 0; k < u[r].v.size(); ++k)
                d = std::max(d, std::abs(u[r].v[k] - v[r].v[k]));
        } else {
            const Grid& g = u[r].grid;
            double acc = 0.0;
            for (int i = 1; i <= g.nt; ++i)
                for (int j = 0; j < g.nx; ++j) {
                    const double diff = u[r].at(i, j) - v[r].at(i, j);
                    acc += diff * diff;
                }
            d = std::sqrt(acc * g.dt * g.dx);
        }
        rho2[r] = d * d;
    }
    return bootstrap_ci(
        rho2.size(),
        [&](std::span<const std::size_t> idx) {
            double s = 0.0;
            for (std::size_t i : idx) s += rho2[i];
            return std::sqrt(std::max(0.0, s / static_cast<double>(idx.size())));
        },
        resamples, seed);
}

ConcentrationProfile concentration_profile(std::span<const double> f_values, double c,
                                           int resamples, std::uint64_t seed) {
    if (!(c > 0.0)) throw DomainError("concentration_profile: C must be positive");
    if (f_values.size() < 2) throw ConfigError("concentration_profile: need samples");
    const std::size_t n = f_values.size();

    // center by the sample mean: the MGF criterion is for E f = 0
    const double fbar = mean(f_values);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = f_values[i] - fbar;

    ConcentrationProfile out;
    out.c = c;
    out.r0 = 2.0 * std::sqrt(2.0 * c * std::log(2.0));

    const int na = 41;
    const double amax = 3.0 / std::sqrt(c);
    for (int k = 0; k < na; ++k) {
        const double a = -amax + 2.0 * amax * k / (na - 1);
        std::vector<double> expv(n);
        for (std::size_t i = 0; i < n; ++i) expv[i] = std::exp(a * centered[i]);
        const Interval ci = bootstrap_mean_ci(expv, resamples, seed + static_cast<std::uint64_t>(k));
        const double bnd = std::exp(a * a * c / 2.0);
        out.a_grid.push_back(a);
        out.mgf_emp.push_back(ci.estimate);
        out.mgf_se.push_back(ci.se);
        out.mgf_bnd.push_back(bnd);
        if (ci.estimate > bnd + 2.0 * ci.se) out.mgf_ok = false;
    }

    // tails beyond the median, bound valid for r >= r0
    std::vector<double> sorted(f_values.begin(), f_values.end());
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[n / 2];
    double rmax = out.r0;
    for (double v : f_values) rmax = std::max(rmax, std::abs(v - median));
    rmax *= 1.2;
    const int nr = 25;
    for (int k = 0; k < nr; ++k) {
        const double r = out.r0 + (rmax - out.r0) * k / (nr - 1);
        std::size_t count = 0;
        for (double v : f_values)
            if (v - median > r) ++count;
        const double p = static_cast<double>(count) / static_cast<double>(n);
        const double se = std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(n)) /
                                    static_cast<double>(n));
        const double bnd = std::exp(-r * r / (8.0 * c));
        out.r_grid.push_back(r);
        out.tail_emp.push_back(p);
        out.tail_se.push_back(se);
        out.tail_bnd.push_back(bnd);
        if (p > bnd + 2.0 * se) out.tail_ok = false;
    }
    return out;
}

} // namespace spdelab
