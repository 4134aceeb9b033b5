#include "spdelab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spdelab {

namespace {

constexpr double kBlowUpLimit = 1e12;

void check_state(const Eigen::VectorXd& state, int step, const HeatKernel& kernel) {
    for (int k = 0; k < state.size(); ++k) {
        const double v = state[k];
        if (!std::isfinite(v) || std::abs(v) > kBlowUpLimit) {
            std::ostringstream msg;
            msg << "solve: blow-up at step " << step << ", node "
                << kernel.node_of(k) << " (value " << v << ")";
            throw NumericError(msg.str());
        }
    }
}

double checked_sigma(const ModelSpec& model, double t, double x, double u) {
    const double s = model.sigma(t, x, u);
    const double k = model.lipschitz.k_sigma;
    if (k > 0.0 && std::abs(s) > k * (1.0 + 1e-9) + 1e-12) {
        std::ostringstream msg;
        msg << "solve: |sigma(" << t << ", " << x << ", " << u << ")| = " << std::abs(s)
            << " exceeds declared K_sigma = " << k;
        throw NumericError(msg.str());
    }
    return s;
}

struct StepWorkspace {
    std::vector<double> noise_row;
    std::vector<double> drift_row;
    Eigen::VectorXd forcing;
};

// forcing = g dt + sigma * dW/dx (+ sigma * X dt); the drift row may be null.
void build_forcing(const ModelSpec& model, const HeatKernel& kernel, int i,
                   const Eigen::VectorXd& state, const double* noise_row,
                   const double* drift_row, Eigen::VectorXd& f) {
    const Grid& g = kernel.grid();
    const double t = g.time(i);
    for (int k = 0; k < kernel.state_size(); ++k) {
        const double x = kernel.state_x(k);
        const double u = state[k];
        const double sig = checked_sigma(model, t, x, u);
        double val = model.g(t, x, u) * g.dt;
        const int cell = kernel.cell_of(k);
        if (cell >= 0) {
            val += sig * noise_row[cell] / g.dx;
            if (drift_row) val += sig * drift_row[cell] * g.dt;
        }
        f[k] = val;
    }
}

} // namespace

FieldPath solve(const ModelSpec& model, const HeatKernel& kernel, const NoiseSheet& noise,
                const DriftSpec* drift, DriftField* x_out) {
    const Grid& grid = kernel.grid();
    if (!same_grid(grid, noise.grid()))
        throw ConfigError("solve: noise grid does not match kernel grid");

    FieldPath path(grid);
    path.seed = noise.seed();
    path.replica = noise.seed().replica;

    std::vector<double> u0_nodes(grid.nx + 1);
    for (int j = 0; j <= grid.nx; ++j) u0_nodes[j] = model.u0(grid.space(j));
    Eigen::VectorXd state = kernel.restrict_to_state(u0_nodes);
    kernel.extend_to_nodes(state, 0, path);

    if (x_out) *x_out = DriftField(grid);
    const Eigen::MatrixXd& step = kernel.step();
    std::vector<double> noise_row(grid.nx);
    std::vector<double> drift_row(grid.nx);
    Eigen::VectorXd forcing(kernel.state_size());

    for (int i = 0; i < grid.nt; ++i) {
        noise.row(i, noise_row.data());
        const double* xrow = nullptr;
        if (drift) {
            PastView past(path, i);
            drift->eval_row(i, grid, past, drift_row.data());
            xrow = drift_row.data();
            if (x_out)
                std::copy(drift_row.begin(), drift_row.end(),
                          x_out->v.begin() + static_cast<std::size_t>(i) * grid.nx);
        }
        build_forcing(model, kernel, i, state, noise_row.data(), xrow, forcing);
        state = step * (state + forcing);
        check_state(state, i + 1, kernel);
        kernel.extend_to_nodes(state, i + 1, path);
    }
    return path;
}

CoupledPair solve_pair(const ModelSpec& model, const HeatKernel& kernel,
                       const NoiseSheet& noise, const DriftSpec& drift) {
    const Grid& grid = kernel.grid();
    if (!same_grid(grid, noise.grid()))
        throw ConfigError("solve_pair: noise grid does not match kernel grid");

    CoupledPair pair;
    pair.u = FieldPath(grid);
    pair.v = FieldPath(grid);
    pair.u.seed = pair.v.seed = noise.seed();
    pair.u.replica = pair.v.replica = noise.seed().replica;
    pair.x = DriftField(grid);

    std::vector<double> u0_nodes(grid.nx + 1);
    for (int j = 0; j <= grid.nx; ++j) u0_nodes[j] = model.u0(grid.space(j));
    Eigen::VectorXd su = kernel.restrict_to_state(u0_nodes);
    Eigen::VectorXd sv = su;
    kernel.extend_to_nodes(su, 0, pair.u);
    kernel.extend_to_nodes(sv, 0, pair.v);

    const Eigen::MatrixXd& step = kernel.step();
    std::vector<double> noise_row(grid.nx);
    Eigen::VectorXd fu(kernel.state_size()), fv(kernel.state_size());

    for (int i = 0; i < grid.nt; ++i) {
        noise.row(i, noise_row.data());
        double* xrow = pair.x.v.data() + static_cast<std::size_t>(i) * grid.nx;
        PastView past(pair.u, i); // drift is adapted to the tilted dynamics u
        drift.eval_row(i, grid, past, xrow);

        build_forcing(model, kernel, i, su, noise_row.data(), xrow, fu);
        build_forcing(model, kernel, i, sv, noise_row.data(), nullptr, fv);
        su = step * (su + fu);
        sv = step * (sv + fv);
        check_state(su, i + 1, kernel);
        check_state(sv, i + 1, kernel);
        kernel.extend_to_nodes(su, i + 1, pair.u);
        kernel.extend_to_nodes(sv, i + 1, pair.v);
    }
    pair.x_norm2 = drift_norm2(pair.x);
    return pair;
}

double sup_norm(const FieldPath& path) {
    double m = 0.0;
    for (double v : path.v) m = std::max(m, std::abs(v));
    return m;
}

double sup_norm_diff(const FieldPath& a, const FieldPath& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

double l2_norm(const FieldPath& path) {
    const Grid& g = path.grid;
    double acc = 0.0;
    for (int i = 1; i <= g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) acc += path.at(i, j) * path.at(i, j);
    return std::sqrt(acc * g.dt * g.dx);
}

double l2_norm_diff(const FieldPath& a, const FieldPath& b) {
    const Grid& g = a.grid;
    double acc = 0.0;
    for (int i = 1; i <= g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) {
            const double d = a.at(i, j) - b.at(i, j);
            acc += d * d;
        }
    return std::sqrt(acc * g.dt * g.dx);
}

double drift_norm2(const DriftField& x) {
    double acc = 0.0;
    for (double v : x.v) acc += v * v;
    return acc * x.grid.cell_measure();
}

LipschitzAudit lipschitz_audit(const ModelSpec& model, const FieldPath& path, double rel_tol) {
    const Grid& g = path.grid;
    LipschitzAudit audit;
    const double h = 1e-5;
    // spot-check every 4th node of every 4th slice along the trajectory
    for (int i = 0; i <= g.nt; i += 4) {
        for (int j = 0; j <= g.nx; j += 4) {
            const double t = g.time(i);
            const double x = g.space(j);
            const double u = path.at(i, j);
            const double gs = std::abs(model.g(t, x, u + h) - model.g(t, x, u - h)) / (2.0 * h);
            const double ss =
                std::abs(model.sigma(t, x, u + h) - model.sigma(t, x, u - h)) / (2.0 * h);
            audit.g_slope_max = std::max(audit.g_slope_max, gs);
            audit.sigma_slope_max = std::max(audit.sigma_slope_max, ss);
            audit.sigma_abs_max = std::max(audit.sigma_abs_max, std::abs(model.sigma(t, x, u)));
        }
    }
    const double bump = 1.0 + rel_tol;
    audit.ok = audit.g_slope_max <= model.lipschitz.l_g * bump + rel_tol &&
               audit.sigma_slope_max <= model.lipschitz.l_sigma * bump + rel_tol &&
               audit.sigma_abs_max <= model.lipschitz.k_sigma * bump + rel_tol;
    return audit;
}

MomentEstimate moment_check(std::span<const FieldPath> paths, double p,
                            int resamples, std::uint64_t seed) {
    if (paths.empty()) throw ConfigError("moment_check: no paths");
    if (p < 1.0) throw DomainError("moment_check: p must be >= 1");
    const Grid& g = paths.front().grid;
    const std::size_t nodes = paths.front().v.size();
    const std::size_t n = paths.size();

    std::vector<double> node_mean(nodes, 0.0);
    bool finite = true;
    for (const FieldPath& path : paths) {
        for (std::size_t m = 0; m < nodes; ++m) {
            const double val = std::pow(std::abs(path.v[m]), p);
            if (!std::isfinite(val)) finite = false;
            node_mean[m] += val;
        }
    }
    for (double& v : node_mean) v /= static_cast<double>(n);

    std::size_t best = 0;
    for (std::size_t m = 1; m < nodes; ++m)
        if (node_mean[m] > node_mean[best]) best = m;

    // candidate nodes near the maximum carry the bootstrap
    std::vector<std::size_t> candidates;
    for (std::size_t m = 0; m < nodes && candidates.size() < 64; ++m)
        if (node_mean[m] >= 0.8 * node_mean[best]) candidates.push_back(m);

    std::vector<std::vector<double>> cand_vals(candidates.size(), std::vector<double>(n));
    for (std::size_t c = 0; c < candidates.size(); ++c)
        for (std::size_t r = 0; r < n; ++r)
            cand_vals[c][r] = std::pow(std::abs(paths[r].v[candidates[c]]), p);

    const Interval ci = bootstrap_ci(
        n,
        [&](std::span<const std::size_t> idx) {
            double sup = 0.0;
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                double s = 0.0;
                for (std::size_t i : idx) s += cand_vals[c][i];
                sup = std::max(sup, s / static_cast<double>(idx.size()));
            }
            return sup;
        },
        resamples, seed);

    MomentEstimate out;
    out.value = node_mean[best];
    out.lo = ci.lo;
    out.hi = ci.hi;
    out.arg_i = static_cast<int>(best / (g.nx + 1));
    out.arg_j = static_cast<int>(best % (g.nx + 1));
    out.finite = finite;
    return out;
}

} // namespace spdelab
