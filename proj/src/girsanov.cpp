#include "spdelab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spdelab {

EntropyEstimate entropy_from_norms(std::span<const double> x_norm2, bool exact,
                                   int resamples, std::uint64_t seed) {
    EntropyEstimate out;
    out.estimate = 0.5 * mean(x_norm2);
    out.exact = exact;
    if (exact || x_norm2.size() < 2) {
        out.lo = out.hi = out.estimate;
        out.se = 0.0;
        return out;
    }
    std::vector<double> halves(x_norm2.size());
    for (std::size_t i = 0; i < x_norm2.size(); ++i) halves[i] = 0.5 * x_norm2[i];
    const Interval ci = bootstrap_mean_ci(halves, resamples, seed);
    out.lo = ci.lo;
    out.hi = ci.hi;
    out.se = ci.se;
    return out;
}

EntropyEstimate entropy(const DriftSpec& drift, std::span<const FieldPath> q_paths,
                        int resamples, std::uint64_t seed) {
    if (q_paths.empty()) throw ConfigError("entropy: no replicas");
    std::vector<double> norms(q_paths.size());
    for (std::size_t r = 0; r < q_paths.size(); ++r) {
        norms[r] = drift_norm2(drift.eval_field(q_paths[r]));
    }
    return entropy_from_norms(norms, drift.is_deterministic(), resamples, seed);
}

std::vector<double> rn_exponent(const DriftField& x, const NoiseSheet& raw_noise) {
    const Grid& g = raw_noise.grid();
    if (!same_grid(g, x.grid))
        throw ConfigError("rn_exponent: drift grid does not match noise grid");
    std::vector<double> m(g.nt + 1);
    m[0] = 1.0;
    double log_m = 0.0;
    std::vector<double> row(g.nx);
    const double dm = g.cell_measure();
    for (int i = 0; i < g.nt; ++i) {
        raw_noise.row(i, row.data());
        for (int j = 0; j < g.nx; ++j) {
            const double xv = x.at(i, j);
            log_m += xv * row[j] - 0.5 * xv * xv * dm;
        }
        if (!(log_m < 700.0)) {
            std::ostringstream msg;
            msg << "rn_exponent: overflow at slice " << i + 1 << " (log M = " << log_m << ")";
            throw NumericError(msg.str());
        }
        m[i + 1] = std::exp(log_m);
    }
    return m;
}

namespace {

struct ReplicaSamples {
    std::vector<double> sup2, l22, x_norm2;
    // |u-v|^2 per node, replica-major
    std::vector<std::vector<double>> diffsq;
    std::vector<FieldPath> u_keep, v_keep;
};

ReplicaSamples run_replicas(const ModelSpec& model, const HeatKernel& kernel,
                            const DriftSpec& drift, std::size_t n,
                            std::uint64_t master_seed, const ExperimentOptions& opts) {
    const Grid& grid = kernel.grid();
    ReplicaSamples s;
    s.sup2.resize(n);
    s.l22.resize(n);
    s.x_norm2.resize(n);
    s.diffsq.resize(n);
    const std::size_t keep = std::min<std::size_t>(opts.keep_paths, n);
    s.u_keep.resize(keep);
    s.v_keep.resize(keep);

    std::vector<std::string> errors(n);
    parallel_for(
        n,
        [&](std::size_t r) {
            try {
                const NoiseSheet sheet =
                    NoiseSheet::sample(grid, SeedSpec{master_seed, static_cast<std::uint64_t>(r)});
                CoupledPair pair = solve_pair(model, kernel, sheet, drift);
                const double sup = sup_norm_diff(pair.u, pair.v);
                const double l2 = l2_norm_diff(pair.u, pair.v);
                s.sup2[r] = sup * sup;
                s.l22[r] = l2 * l2;
                s.x_norm2[r] = pair.x_norm2;
                std::vector<double> dsq(pair.u.v.size());
                for (std::size_t m = 0; m < dsq.size(); ++m) {
                    const double d = pair.u.v[m] - pair.v.v[m];
                    dsq[m] = d * d;
                }
                s.diffsq[r] = std::move(dsq);
                if (r < keep) {
                    s.u_keep[r] = std::move(pair.u);
                    s.v_keep[r] = std::move(pair.v);
                }
            } catch (const std::exception& e) {
                errors[r] = e.what();
            }
        },
        opts.exec);

    for (std::size_t r = 0; r < n; ++r) {
        if (!errors[r].empty()) {
            std::ostringstream msg;
            msg << "replica " << r << " failed: " << errors[r];
            throw NumericError(msg.str());
        }
    }
    return s;
}

// H * m discrete convolution with the left rule in s, then the two integral
// terms and the constant term of the Gronwall inequality.
std::vector<double> gronwall_rhs(const std::vector<double>& m_curve,
                                 const std::vector<double>& h_values, double dt,
                                 double g_total, const LipschitzData& lip,
                                 double mean_xnorm2) {
    const std::size_t n = m_curve.size();
    std::vector<double> rhs(n, 0.0);
    const double const_term = 3.0 * lip.k_sigma * lip.k_sigma * g_total * mean_xnorm2;
    for (std::size_t i = 0; i < n; ++i) {
        double conv = 0.0, integral = 0.0;
        for (std::size_t ip = 0; ip < i; ++ip) {
            conv += h_values[i - ip] * m_curve[ip];
            integral += m_curve[ip];
        }
        rhs[i] = 3.0 * lip.l_sigma * lip.l_sigma * conv * dt +
                 3.0 * g_total * lip.l_g * lip.l_g * integral * dt + const_term;
    }
    return rhs;
}

GronwallDiagnostics gronwall_diagnostics(const ReplicaSamples& s, const HeatKernel& kernel,
                                         const LipschitzData& lip, std::uint64_t seed,
                                         int resamples, bool sup_mode, double alpha,
                                         double constant_value) {
    const Grid& grid = kernel.grid();
    const std::size_t n = s.diffsq.size();
    const std::size_t nodes = s.diffsq.front().size();
    const int nt1 = grid.nt + 1;
    const int nx1 = grid.nx + 1;

    // node means of |u-v|^2
    std::vector<double> node_mean(nodes, 0.0);
    for (const auto& d : s.diffsq)
        for (std::size_t m = 0; m < nodes; ++m) node_mean[m] += d[m];
    for (double& v : node_mean) v /= static_cast<double>(n);

    GronwallDiagnostics out;
    out.m.resize(nt1);
    out.nu.resize(nt1);
    std::vector<std::size_t> arg_node(nt1); // achieving node of the running max
    double running = 0.0;
    std::size_t running_node = 0;
    for (int i = 0; i < nt1; ++i) {
        for (int j = 0; j < nx1; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * nx1 + j;
            if (node_mean[idx] > running) {
                running = node_mean[idx];
                running_node = idx;
            }
        }
        out.m[i] = running;
        arg_node[i] = running_node;
    }

    // nu: pathwise running sup, then mean over replicas
    {
        std::vector<double> acc(nt1, 0.0);
        for (const auto& d : s.diffsq) {
            double run = 0.0;
            for (int i = 0; i < nt1; ++i) {
                for (int j = 0; j < nx1; ++j)
                    run = std::max(run, d[static_cast<std::size_t>(i) * nx1 + j]);
                acc[i] += run;
            }
        }
        for (int i = 0; i < nt1; ++i) out.nu[i] = acc[i] / static_cast<double>(n);
    }

    const double g_total = kernel.g_total();
    const std::vector<double>& h = kernel.h_values();
    const double mean_x2 = mean(s.x_norm2);
    out.rhs = gronwall_rhs(out.m, h, grid.dt, g_total, lip, mean_x2);
    out.slack.resize(nt1);
    for (int i = 0; i < nt1; ++i) out.slack[i] = out.rhs[i] - out.m[i];

    // bootstrap the slack with the achieving nodes held fixed
    std::vector<std::vector<double>> node_vals(nt1, std::vector<double>(n));
    for (int i = 0; i < nt1; ++i)
        for (std::size_t r = 0; r < n; ++r) node_vals[i][r] = s.diffsq[r][arg_node[i]];

    std::vector<std::vector<double>> slack_samples(nt1);
    const CounterRng rng(SeedSpec{seed, 0x6b0075ULL});
    std::uint64_t counter = 0;
    std::vector<double> m_b(nt1);
    for (int b = 0; b < resamples; ++b) {
        double x2_sum = 0.0;
        std::vector<double> msum(nt1, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t pick = static_cast<std::size_t>(rng.bits(counter++) % n);
            x2_sum += s.x_norm2[pick];
            for (int i = 0; i < nt1; ++i) msum[i] += node_vals[i][pick];
        }
        double run = 0.0;
        for (int i = 0; i < nt1; ++i) {
            run = std::max(run, msum[i] / static_cast<double>(n));
            m_b[i] = run;
        }
        const std::vector<double> rhs_b =
            gronwall_rhs(m_b, h, grid.dt, g_total, lip, x2_sum / static_cast<double>(n));
        for (int i = 0; i < nt1; ++i) slack_samples[i].push_back(rhs_b[i] - m_b[i]);
    }
    out.slack_se.resize(nt1);
    out.ok = true;
    for (int i = 0; i < nt1; ++i) {
        double se = 0.0;
        if (!slack_samples[i].empty()) {
            const double mb = mean(slack_samples[i]);
            double var = 0.0;
            for (double v : slack_samples[i]) var += (v - mb) * (v - mb);
            se = std::sqrt(var / std::max<std::size_t>(1, slack_samples[i].size() - 1));
        }
        out.slack_se[i] = se;
        if (out.slack[i] < -2.0 * se) out.ok = false;
    }

    // trivial bound: the L2 node sum is dominated by T D times the sup of the
    // node means, exactly, on every sample
    out.trivial_lhs = mean(s.l22);
    out.trivial_rhs = grid.horizon * grid.length * out.m.back();
    out.trivial_ok = out.trivial_lhs <= out.trivial_rhs * (1.0 + 1e-9) + 1e-300;

    if (sup_mode) {
        // pathwise sup chain at grid scale: no statistical tolerance needed
        out.sup_chain_slack.resize(nt1);
        double integral = 0.0;
        for (int i = 0; i < nt1; ++i) {
            const double bound =
                2.0 * lip.l_g * lip.l_g * grid.horizon * integral + 2.0 * g_total * mean_x2;
            out.sup_chain_slack[i] = bound - out.nu[i];
            if (out.sup_chain_slack[i] < -1e-9 * (1.0 + bound)) out.sup_chain_ok = false;
            integral += out.nu[i] * grid.dt;
        }
    } else if (alpha > 1.0) {
        // powered self-referential inequality at the experiment's beta,
        // compared in m units through the beta-th root
        const double beta = conjugate_exponent(alpha);
        out.power_chain_slack.resize(nt1);
        double conv = 0.0, integral = 0.0;
        for (int i = 0; i < nt1; ++i) {
            conv = 0.0;
            for (int ip = 0; ip < i; ++ip) conv += h[i - ip] * out.m[ip] * grid.dt;
            const double t1 = std::pow(lip.l_sigma * lip.l_sigma * conv, beta);
            const double t2 = std::pow(g_total * lip.l_g * lip.l_g * integral, beta);
            const double t3 = std::pow(lip.k_sigma * lip.k_sigma * g_total * mean_x2, beta);
            const double rhs_beta = std::pow(3.0, 2.0 * beta - 1.0) * (t1 + t2 + t3);
            const double bound_m = std::pow(rhs_beta, 1.0 / beta);
            out.power_chain_slack[i] = bound_m - out.m[i];
            if (out.power_chain_slack[i] < -2.0 * out.slack_se[i]) out.power_chain_ok = false;
            integral += out.m[i] * grid.dt;
        }
        // Gronwall closure: m(T) <= (C_{2,alpha} / (T D)) E||X||^2
        const double closure = constant_value / (grid.horizon * grid.length) * mean_x2;
        out.final_slack = closure - out.m.back();
        out.final_ok = out.final_slack >= -2.0 * out.slack_se.back();
    }
    return out;
}

TciReport assemble_report(const char* mode, const ModelSpec& model, const HeatKernel& kernel,
                          const DriftSpec& drift, double constant_value,
                          const char* constant_label, double alpha, std::size_t n,
                          std::uint64_t master_seed, const ExperimentOptions& opts,
                          bool sup_distance) {
    ReplicaSamples samples =
        run_replicas(model, kernel, drift, n, master_seed, opts);

    TciReport rep;
    rep.mode = mode;
    rep.replicas = n;
    rep.seed = master_seed;
    rep.constant_label = constant_label;
    rep.constant_value = constant_value;
    rep.alpha = alpha;

    const std::vector<double>& dist2 = sup_distance ? samples.sup2 : samples.l22;
    const int resamples = opts.bootstrap_resamples;

    rep.entropy = entropy_from_norms(samples.x_norm2, drift.is_deterministic(),
                                     resamples, master_seed ^ 0xe57ULL);

    auto sqrt_mean = [](std::span<const double> vals, std::span<const std::size_t> idx) {
        double s = 0.0;
        for (std::size_t i : idx) s += vals[i];
        return std::sqrt(std::max(0.0, s / static_cast<double>(idx.size())));
    };
    rep.lhs = bootstrap_ci(
        n, [&](std::span<const std::size_t> idx) { return sqrt_mean(dist2, idx); },
        resamples, master_seed ^ 0x1e5ULL);
    rep.rhs_ci = bootstrap_ci(
        n,
        [&](std::span<const std::size_t> idx) {
            double s = 0.0;
            for (std::size_t i : idx) s += samples.x_norm2[i];
            return std::sqrt(std::max(0.0, constant_value * s / static_cast<double>(idx.size())));
        },
        resamples, master_seed ^ 0x2e5ULL);
    rep.rhs = rep.rhs_ci.estimate;
    rep.rhs_wasserstein_form = std::sqrt(2.0 * constant_value * rep.entropy.estimate);

    if (rep.rhs == 0.0) {
        rep.ratio = Interval{}; // X == 0: lhs = rhs = 0, ratio defined as 0
        rep.failed = rep.lhs.estimate > 0.0;
    } else {
        rep.ratio = bootstrap_ci(
            n,
            [&](std::span<const std::size_t> idx) {
                const double l = sqrt_mean(dist2, idx);
                double s = 0.0;
                for (std::size_t i : idx) s += samples.x_norm2[i];
                const double r =
                    std::sqrt(std::max(0.0, constant_value * s / static_cast<double>(idx.size())));
                return r > 0.0 ? l / r : 0.0;
            },
            resamples, master_seed ^ 0x3e5ULL);
        rep.failed = rep.ratio.lo > 1.0;
    }

    rep.gronwall = gronwall_diagnostics(samples, kernel, model.lipschitz,
                                        master_seed ^ 0x4e5ULL, resamples, sup_distance,
                                        alpha, constant_value);

    rep.rep_x_norm2 = std::move(samples.x_norm2);
    rep.rep_sup.resize(n);
    rep.rep_l2.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        rep.rep_sup[r] = std::sqrt(samples.sup2[r]);
        rep.rep_l2[r] = std::sqrt(samples.l22[r]);
    }
    rep.u_sample = std::move(samples.u_keep);
    rep.v_sample = std::move(samples.v_keep);
    return rep;
}

void require_unit_sigma(const ModelSpec& model, const Grid& grid) {
    const double probes_t[] = {0.0, 0.31 * grid.horizon, grid.horizon};
    const double probes_x[] = {0.0, 0.47 * grid.length, grid.length};
    const double probes_u[] = {-2.3, 0.0, 0.7, 11.0};
    for (double t : probes_t)
        for (double x : probes_x)
            for (double u : probes_u)
                if (std::abs(model.sigma(t, x, u) - 1.0) > 1e-12)
                    throw ConfigError(
                        "tci_experiment_sup: requires sigma == 1 (constant-noise theorem)");
}

} // namespace

TciReport tci_experiment_sup(const ModelSpec& model, const HeatKernel& kernel,
                             const DriftSpec& drift, double c_inf,
                             std::size_t n_replicas, std::uint64_t master_seed,
                             const ExperimentOptions& opts) {
    require_unit_sigma(model, kernel.grid());
    return assemble_report("sup", model, kernel, drift, c_inf, "c_infinity", 0.0,
                           n_replicas, master_seed, opts, /*sup_distance=*/true);
}

TciReport tci_experiment_l2(const ModelSpec& model, const HeatKernel& kernel,
                            const DriftSpec& drift, double c_two, double alpha,
                            std::size_t n_replicas, std::uint64_t master_seed,
                            const ExperimentOptions& opts) {
    return assemble_report("l2", model, kernel, drift, c_two, "c_two_alpha", alpha,
                           n_replicas, master_seed, opts, /*sup_distance=*/false);
}

} // namespace spdelab
