#include <cmath>
#include <vector>

#include "doctest.h"

#include "spdelab/girsanov.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/solver.hpp"

using namespace spdelab;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModelSpec make_model(const Grid& grid, Boundary bc, CoefficientFn g, CoefficientFn sigma,
                     InitialFn u0, LipschitzData lip) {
    ModelSpec m;
    m.g = std::move(g);
    m.sigma = std::move(sigma);
    m.u0 = std::move(u0);
    m.lipschitz = lip;
    m.op = OperatorSpec::constant(1.0, 0.0, bc, grid);
    return m;
}

ModelSpec additive(const Grid& grid, Boundary bc = Boundary::Dirichlet) {
    return make_model(
        grid, bc, [](double, double, double) { return 0.0; },
        [](double, double, double) { return 1.0; }, [](double) { return 0.0; },
        LipschitzData{0.0, 0.0, 1.0});
}

NoiseSheet zero_noise(const Grid& g) {
    return NoiseSheet::from_values(g, std::vector<double>(g.cells(), 0.0));
}

// Walsh isometry quadrature: Var[u(t_i, x at state j)] for sigma == 1 equals
// sum_{s=1..i} sum_cells G(s dt, x_j, y_k)^2 dx dt. Test-side oracle.
double variance_quadrature(const HeatKernel& k, int i, int state_j) {
    const Grid& g = k.grid();
    double acc = 0.0;
    for (int s = 1; s <= i; ++s) {
        const Eigen::MatrixXd& p = k.slice(s);
        for (int l = 0; l < k.state_size(); ++l) {
            if (k.cell_of(l) < 0) continue;
            acc += p(state_j, l) * p(state_j, l);
        }
    }
    return acc * g.dt / g.dx;
}

} // namespace

TEST_CASE("deterministic heat benchmark: eigenmode decay") {
    const Grid g = make_grid(0.25, 1.0, 128, 128);
    const ModelSpec model = make_model(
        g, Boundary::Dirichlet, [](double, double, double) { return 0.0; },
        [](double, double, double) { return 0.0; },
        [](double x) { return std::sin(kPi * x); }, LipschitzData{0.0, 0.0, 0.0});
    const HeatKernel kernel(model.op, g);
    const FieldPath u = solve(model, kernel, zero_noise(g));

    double num = 0.0, den = 0.0;
    for (int i = 1; i <= g.nt; ++i)
        for (int j = 0; j < g.nx; ++j) {
            const double want = std::exp(-0.5 * kPi * kPi * g.time(i)) * std::sin(kPi * g.space(j));
            num += (u.at(i, j) - want) * (u.at(i, j) - want);
            den += want * want;
        }
    CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("Walsh isometry: additive-noise variance matches kernel quadrature") {
    const Grid g = make_grid(0.25, 1.0, 64, 64);
    const ModelSpec model = additive(g);
    const HeatKernel kernel(model.op, g);
    const std::size_t n = 4000;

    const int probes_state[] = {31, 15, 47}; // x = 0.5, 0.25, 0.75
    std::vector<std::vector<double>> samples(3, std::vector<double>(n));
    parallel_for(n, [&](std::size_t r) {
        const FieldPath u = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{2024, r}));
        for (int p = 0; p < 3; ++p) {
            const int node = kernel.node_of(probes_state[p]);
            samples[p][r] = u.at(g.nt, node);
        }
    });
    for (int p = 0; p < 3; ++p) {
        const double want = variance_quadrature(kernel, g.nt, probes_state[p]);
        const double got = sample_variance(samples[p]);
        CHECK(std::abs(got - want) / want < 0.05);
    }
}

TEST_CASE("grid mismatch is a configuration error") {
    const Grid g = make_grid(0.25, 1.0, 16, 16);
    const Grid other = make_grid(0.25, 1.0, 16, 32);
    const ModelSpec model = additive(g);
    const HeatKernel kernel(model.op, g);
    CHECK_THROWS_AS(solve(model, kernel, NoiseSheet::sample(other, SeedSpec{1, 1})), ConfigError);
}

TEST_CASE("drift 0 with raw noise equals driftless solve exactly") {
    const Grid g = make_grid(0.25, 1.0, 32, 32);
    const ModelSpec model = additive(g);
    const HeatKernel kernel(model.op, g);
    const NoiseSheet sheet = NoiseSheet::sample(g, SeedSpec{5, 0});
    const DriftSpec zero = DriftSpec::zero();
    const FieldPath a = solve(model, kernel, sheet);
    const FieldPath b = solve(model, kernel, sheet, &zero);
    CHECK(a.v == b.v);
}

TEST_CASE("solve_pair") {
    const Grid g = make_grid(0.5, 1.0, 32, 32);
    const HeatKernel kernel(OperatorSpec::constant(1.0, 0.0, Boundary::Dirichlet, g), g);

    SUBCASE("X == 0 gives u == v bitwise") {
        ModelSpec model = additive(g);
        model.g = [](double, double, double u) { return std::sin(u); };
        model.lipschitz.l_g = 1.0;
        const CoupledPair pair =
            solve_pair(model, kernel, NoiseSheet::sample(g, SeedSpec{6, 0}), DriftSpec::zero());
        CHECK(pair.u.v == pair.v.v);
        CHECK(pair.x_norm2 == 0.0);
    }

    SUBCASE("g == 0, sigma == 1, X == c: u - v is the deterministic drift convolution") {
        const ModelSpec model = additive(g);
        const double c = 0.8;
        const CoupledPair pair =
            solve_pair(model, kernel, NoiseSheet::sample(g, SeedSpec{6, 1}), DriftSpec::constant(c));
        // oracle: c dt sum_{s=1..i} row sums of P(s dt) over noise-fed cells
        double max_rel = 0.0;
        for (int i = 8; i <= g.nt; i += 8) {
            for (int js = 0; js < kernel.state_size(); js += 5) {
                double conv = 0.0;
                for (int s = 1; s <= i; ++s) {
                    double row = 0.0;
                    for (int l = 0; l < kernel.state_size(); ++l)
                        if (kernel.cell_of(l) >= 0) row += kernel.slice(s)(js, l);
                    conv += row;
                }
                conv *= c * g.dt;
                const double got = pair.u.at(i, kernel.node_of(js)) - pair.v.at(i, kernel.node_of(js));
                if (conv > 1e-6) max_rel = std::max(max_rel, std::abs(got - conv) / conv);
            }
        }
        CHECK(max_rel < 1e-8);
        // ||X||^2 = c^2 T D to machine precision
        CHECK(pair.x_norm2 == doctest::Approx(c * c * g.horizon * g.length).epsilon(1e-12));
    }

    SUBCASE("sup|u - v| scales linearly in small constant drifts") {
        ModelSpec model = additive(g);
        model.g = [](double, double, double u) { return std::sin(u); };
        model.lipschitz.l_g = 1.0;
        const NoiseSheet sheet = NoiseSheet::sample(g, SeedSpec{6, 2});
        std::vector<double> cs = {0.1, 0.2, 0.4};
        std::vector<double> sups;
        for (double c : cs)
            sups.push_back(sup_norm_diff(solve_pair(model, kernel, sheet, DriftSpec::constant(c)).u,
                                         solve_pair(model, kernel, sheet, DriftSpec::constant(c)).v));
        // regression through the origin; R^2 against the linear fit
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            sxx += cs[i] * cs[i];
            sxy += cs[i] * sups[i];
        }
        const double slope = sxy / sxx;
        double ss_res = 0.0, ss_tot = 0.0;
        const double mean_sup = (sups[0] + sups[1] + sups[2]) / 3.0;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            ss_res += (sups[i] - slope * cs[i]) * (sups[i] - slope * cs[i]);
            ss_tot += (sups[i] - mean_sup) * (sups[i] - mean_sup);
        }
        CHECK(1.0 - ss_res / ss_tot > 0.99);
    }
}

TEST_CASE("boundary conditions hold along trajectories") {
    SUBCASE("Dirichlet walls stay at zero") {
        const Grid g = make_grid(0.25, 1.0, 32, 32);
        const ModelSpec model = additive(g);
        const HeatKernel kernel(model.op, g);
        const FieldPath u = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{8, 0}));
        for (int i = 0; i <= g.nt; ++i) {
            CHECK(u.at(i, 0) == 0.0);
            CHECK(u.at(i, g.nx) == 0.0);
        }
    }
    SUBCASE("periodic wraparound equality") {
        const Grid g = make_grid(0.25, 1.0, 32, 32);
        const ModelSpec model = additive(g, Boundary::Periodic);
        const HeatKernel kernel(model.op, g);
        const FieldPath u = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{8, 1}));
        for (int i = 0; i <= g.nt; ++i) CHECK(u.at(i, 0) == u.at(i, g.nx));
    }
    SUBCASE("Neumann one-sided derivative vanishes under refinement (smooth flow)") {
        double prev = 0.0;
        for (int n : {32, 64}) {
            const Grid g = make_grid(0.25, 1.0, n, n);
            const ModelSpec model = make_model(
                g, Boundary::Neumann, [](double, double, double) { return 0.0; },
                [](double, double, double) { return 0.0; },
                [](double x) { return std::cos(kPi * x); }, LipschitzData{0.0, 0.0, 0.0});
            const HeatKernel kernel(model.op, g);
            const FieldPath u = solve(model, kernel, zero_noise(g));
            double worst = 0.0;
            for (int i = 0; i <= g.nt; ++i) {
                worst = std::max(worst, std::abs(u.at(i, 1) - u.at(i, 0)) / g.dx);
                worst = std::max(worst, std::abs(u.at(i, g.nx) - u.at(i, g.nx - 1)) / g.dx);
            }
            if (n == 64) CHECK(worst < 0.6 * prev); // first-order decay or better
            prev = worst;
        }
    }
}

TEST_CASE("norms") {
    const Grid g = make_grid(2.0, 0.5, 8, 8);
    FieldPath zero(g);
    CHECK(sup_norm(zero) == 0.0);
    CHECK(l2_norm(zero) == 0.0);

    FieldPath spike(g);
    spike.at(3, 4) = -7.5;
    CHECK(sup_norm(spike) == doctest::Approx(7.5));

    FieldPath c(g, 2.0);
    CHECK(l2_norm(c) == doctest::Approx(2.0 * std::sqrt(g.horizon * g.length)).epsilon(1e-12));
    // norm comparison ||u||_{T,2}^2 <= T D sup^2
    CHECK(l2_norm(c) * l2_norm(c) <=
          g.horizon * g.length * sup_norm(c) * sup_norm(c) + 1e-12);

    FieldPath flip = spike;
    for (double& v : flip.v) v = -v;
    CHECK(sup_norm(flip) == sup_norm(spike));
}

TEST_CASE("blow-up guard aborts with location") {
    const Grid g = make_grid(0.5, 1.0, 16, 16);
    ModelSpec model = additive(g);
    // forcing far beyond the guard in one step
    model.g = [](double, double, double) { return 1e14; };
    model.lipschitz.l_g = 0.0;
    const HeatKernel kernel(model.op, g);
    CHECK_THROWS_AS(solve(model, kernel, zero_noise(g)), NumericError);
}

TEST_CASE("sigma bound is enforced pointwise") {
    const Grid g = make_grid(0.5, 1.0, 16, 16);
    ModelSpec model = additive(g);
    model.sigma = [](double, double, double) { return 2.0; };
    model.lipschitz.k_sigma = 1.0; // declared bound too small
    const HeatKernel kernel(model.op, g);
    CHECK_THROWS_AS(solve(model, kernel, NoiseSheet::sample(g, SeedSpec{1, 2})), NumericError);
}

TEST_CASE("lazy and materialized noise drive identical trajectories") {
    const Grid g = make_grid(0.25, 1.0, 24, 24);
    const ModelSpec model = additive(g);
    const HeatKernel kernel(model.op, g);
    const FieldPath a = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{13, 4}));
    const FieldPath b = solve(model, kernel, NoiseSheet::lazy(g, SeedSpec{13, 4}));
    CHECK(a.v == b.v);
}

TEST_CASE("determinism: same seed and config give bit-identical paths") {
    const Grid g = make_grid(0.5, 1.0, 24, 24);
    ModelSpec model = additive(g);
    model.g = [](double, double, double u) { return 0.5 * std::sin(u); };
    model.lipschitz.l_g = 0.5;
    const HeatKernel kernel(model.op, g);
    const FieldPath a = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{33, 7}));
    const FieldPath b = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{33, 7}));
    CHECK(a.v == b.v);
}

TEST_CASE("coupling consistency: law of v matches the driftless law (KS)") {
    const Grid g = make_grid(0.5, 1.0, 32, 32);
    ModelSpec model = additive(g);
    model.g = [](double, double, double u) { return std::sin(u); };
    model.lipschitz.l_g = 1.0;
    const HeatKernel kernel(model.op, g);
    const DriftSpec drift = DriftSpec::constant(1.0);

    const int n = 2000;
    std::vector<double> from_pair(n), direct(n);
    parallel_for(n, [&](std::size_t r) {
        const CoupledPair p =
            solve_pair(model, kernel, NoiseSheet::sample(g, SeedSpec{71, r}), drift);
        from_pair[r] = p.v.at(g.nt, g.nx / 2);
        const FieldPath u = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{72, r}));
        direct[r] = u.at(g.nt, g.nx / 2);
    });
    const KsResult ks = ks_two_sample(from_pair, direct, 0.01);
    CHECK_FALSE(ks.reject);
}

TEST_CASE("self-convergence of E||u||^2 for the additive case") {
    // E||u||_{T,2}^2 = sum_{i,j} Var[u(t_i,x_j)] dt dx, computable by quadrature
    auto expected_l2sq = [](int n) {
        const Grid g = make_grid(0.25, 1.0, n, n);
        const HeatKernel k(OperatorSpec::constant(1.0, 0.0, Boundary::Dirichlet, g), g);
        // Var at t_i sums squared kernel rows over s = 1..i; lag s contributes
        // to every slice i >= s, i.e. (nt - s + 1) times
        std::vector<double> var(k.state_size(), 0.0);
        double total = 0.0;
        for (int s = 1; s <= g.nt; ++s) {
            const Eigen::MatrixXd& ps = k.slice(s);
            for (int js = 0; js < k.state_size(); ++js) {
                double v = 0.0;
                for (int l = 0; l < k.state_size(); ++l)
                    if (k.cell_of(l) >= 0) v += ps(js, l) * ps(js, l);
                var[js] += v * static_cast<double>(g.nt - s + 1);
            }
        }
        for (int js = 0; js < k.state_size(); ++js)
            total += var[js] * g.dt / g.dx * g.dt * g.dx;
        return total;
    };
    // For the constant-coefficient Dirichlet case the same quantity reduces to
    // geometric series over the sine eigenbasis: P symmetric gives
    // rowsq_j(s dt) = P(2 s dt)_{jj} and the j-sum collapses by orthogonality.
    auto closed_form = [](int n) {
        const Grid g = make_grid(0.25, 1.0, n, n);
        double total = 0.0;
        for (int m = 1; m < n; ++m) {
            const double lam = -(1.0 - std::cos(m * kPi * g.dx)) / (g.dx * g.dx);
            const double q = std::exp(2.0 * lam * g.dt);
            const double geom_tail = q * (1.0 - std::pow(q, g.nt)) / (1.0 - q);
            const double sum_i = (g.nt - geom_tail) * q / (1.0 - q);
            total += sum_i * g.dt * g.dt;
        }
        return total;
    };
    // the reduction agrees with the direct kernel quadrature
    CHECK(closed_form(32) == doctest::Approx(expected_l2sq(32)).epsilon(1e-8));
    // the scheme self-converges: successive halvings shrink the change, and the
    // change drops below 2% (the singular kernel makes the rate O(sqrt(dt)))
    const double a = closed_form(512);
    const double b = closed_form(1024);
    const double c = closed_form(2048);
    const double change_ab = std::abs(b - a) / b;
    const double change_bc = std::abs(c - b) / c;
    CHECK(change_bc < change_ab);
    CHECK(change_bc < 0.02);
}

TEST_CASE("moment_check") {
    const Grid g = make_grid(0.25, 1.0, 16, 16);

    SUBCASE("deterministic path gives the exact p-th power of the sup") {
        FieldPath p(g);
        p.at(5, 7) = 1.7;
        std::vector<FieldPath> paths = {p, p, p};
        const MomentEstimate est = moment_check(paths, 3.0, 100, 1);
        CHECK(est.value == doctest::Approx(std::pow(1.7, 3.0)));
        CHECK(est.finite);
    }

    SUBCASE("additive Gaussian moments match the Wick formulas") {
        const ModelSpec model = additive(g);
        const HeatKernel kernel(model.op, g);
        const std::size_t n = 4000;
        std::vector<FieldPath> paths(n);
        parallel_for(n, [&](std::size_t r) {
            paths[r] = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{91, r}));
        });
        // mean zero: E|u|^2 = Var, E|u|^4 = 3 Var^2 at every node; the sup over
        // nodes is attained at the largest-variance node
        double vmax = 0.0;
        for (int js = 0; js < kernel.state_size(); ++js)
            vmax = std::max(vmax, variance_quadrature(kernel, g.nt, js));
        const MomentEstimate m2 = moment_check(paths, 2.0, 200, 2);
        CHECK(std::abs(m2.value - vmax) / vmax < 0.05);
        const MomentEstimate m4 = moment_check(paths, 4.0, 200, 3);
        CHECK(std::abs(m4.value - 3.0 * vmax * vmax) / (3.0 * vmax * vmax) < 0.10);
    }
}

TEST_CASE("lipschitz audit flags understated constants") {
    const Grid g = make_grid(0.25, 1.0, 16, 16);
    ModelSpec model = additive(g);
    model.g = [](double, double, double u) { return std::sin(u); };
    model.lipschitz.l_g = 1.0;
    const HeatKernel kernel(model.op, g);
    const FieldPath path = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{3, 3}));
    CHECK(lipschitz_audit(model, path).ok);
    model.lipschitz.l_g = 0.2; // understated
    CHECK_FALSE(lipschitz_audit(model, path).ok);
}

TEST_CASE("adaptedness: drift cannot read future slices") {
    const Grid g = make_grid(0.25, 1.0, 8, 8);
    FieldPath u(g, 1.0);
    const PastView past(u, 3);
    CHECK(past.at(3, 2) == 1.0);
    CHECK_THROWS_AS(past.at(4, 2), DomainError);
}
