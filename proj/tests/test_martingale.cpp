#include <cmath>
#include <vector>

#include "doctest.h"

#include "spdelab/martingale.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/stats.hpp"

using namespace spdelab;

namespace {

std::vector<BasisMotions> sample_motions(const Grid& g, std::size_t n, std::uint64_t master) {
    std::vector<BasisMotions> motions(n);
    parallel_for(n, [&](std::size_t r) {
        motions[r] = BasisMotions::from_noise(NoiseSheet::sample(g, SeedSpec{master, r}));
    });
    return motions;
}

std::vector<std::vector<double>> make_paths(
    const std::vector<BasisMotions>& motions,
    const std::function<double(const BasisMotions&, int)>& m_of) {
    std::vector<std::vector<double>> out(motions.size());
    for (std::size_t r = 0; r < motions.size(); ++r) {
        const Grid& g = motions[r].grid;
        out[r].resize(g.nt + 1);
        for (int i = 0; i <= g.nt; ++i) out[r][i] = m_of(motions[r], i);
    }
    return out;
}

} // namespace

TEST_CASE("basis motions are independent Brownian motions") {
    const Grid g = make_grid(1.0, 1.0, 16, 8);

    SUBCASE("zero noise gives zero motions") {
        const NoiseSheet z = NoiseSheet::from_values(g, std::vector<double>(g.cells(), 0.0));
        const BasisMotions bm = BasisMotions::from_noise(z);
        CHECK(bm.w.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("Var[W_k(T)] = T and cross-covariance vanishes") {
        const std::size_t n = 8000;
        std::vector<double> w1(n), w2(n);
        parallel_for(n, [&](std::size_t r) {
            const BasisMotions bm =
                BasisMotions::from_noise(NoiseSheet::sample(g, SeedSpec{1717, r}));
            w1[r] = bm.at(g.nt, 0);
            w2[r] = bm.at(g.nt, 5);
        });
        const double T = g.horizon;
        CHECK(std::abs(sample_variance(w1) - T) < 5.0 * T * std::sqrt(2.0 / n));
        CHECK(std::abs(sample_variance(w2) - T) < 5.0 * T * std::sqrt(2.0 / n));
        CHECK(std::abs(sample_covariance(w1, w2)) < 4.0 * T / std::sqrt(n));
    }

    SUBCASE("basis orthonormality: sum_j e_k e_l dx = delta_kl") {
        // e_k = 1/sqrt(dx) on cell k: the discrete inner product is exact
        const double dx = g.dx;
        const double self = (1.0 / std::sqrt(dx)) * (1.0 / std::sqrt(dx)) * dx;
        CHECK(self == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("projection recovers closed-form integrands") {
    const Grid g = make_grid(1.0, 1.0, 16, 8);
    const std::size_t n = 10000;
    const std::vector<BasisMotions> motions = sample_motions(g, n, 31);
    ProjectionOptions opts;
    opts.basis_size = 3;
    opts.poly_degree = 2;

    SUBCASE("M = W_1: X_1 == 1, others vanish") {
        const auto paths = make_paths(motions, [](const BasisMotions& bm, int i) {
            return bm.at(i, 0);
        });
        const MartingaleProjection proj = project_martingale(paths, motions, opts);
        for (int i = 0; i < g.nt; ++i) {
            CHECK(std::abs(proj.coef[i](0, 0) - 1.0) < 1e-2);
            CHECK(std::abs(proj.coef[i](1, 0)) < 1e-2);
            CHECK(std::abs(proj.coef[i](2, 0)) < 1e-2);
        }
    }

    SUBCASE("M = W_1^2 - t: X_1(t) = 2 W_1(t), slope within 5%") {
        const auto paths = make_paths(motions, [&g](const BasisMotions& bm, int i) {
            return bm.at(i, 0) * bm.at(i, 0) - g.time(i);
        });
        const MartingaleProjection proj = project_martingale(paths, motions, opts);
        for (int i = 1; i < g.nt; ++i) // slope unidentifiable at t=0 where W=0
            CHECK(std::abs(proj.coef[i](0, 1) - 2.0) / 2.0 < 0.05);
    }

    SUBCASE("M = a W_1 + b W_2: linearity") {
        const auto paths = make_paths(motions, [](const BasisMotions& bm, int i) {
            return 0.8 * bm.at(i, 0) - 1.4 * bm.at(i, 1);
        });
        const MartingaleProjection proj = project_martingale(paths, motions, opts);
        for (int i = 0; i < g.nt; ++i) {
            CHECK(std::abs(proj.coef[i](0, 0) - 0.8) < 1e-2);
            CHECK(std::abs(proj.coef[i](1, 0) + 1.4) < 1e-2);
        }
    }
}

TEST_CASE("reconstruction") {
    const Grid g = make_grid(1.0, 1.0, 32, 8);
    const std::size_t n = 4000;
    const std::vector<BasisMotions> motions = sample_motions(g, n, 57);

    SUBCASE("closed-form X for M = W_1 is exact to floating error") {
        for (std::size_t r = 0; r < 16; ++r) {
            const std::vector<double> mhat = reconstruct_with(
                [](int, int k, const BasisMotions&) { return k == 0 ? 1.0 : 0.0; }, 2, motions[r]);
            for (int i = 0; i <= g.nt; ++i)
                CHECK(std::abs(mhat[i] - motions[r].at(i, 0)) < 1e-10);
        }
    }

    SUBCASE("closed-form X = 2 W_1 for M = W_1^2 - t: quadratic-variation residual") {
        // discrete Ito: sum 2 W dW = W^2 - sum (dW)^2; the residual against
        // W^2 - t is t - sum (dW)^2 with variance 2 t dt
        std::vector<double> res_t(n);
        for (std::size_t r = 0; r < n; ++r) {
            const std::vector<double> mhat = reconstruct_with(
                [&](int i, int k, const BasisMotions& bm) {
                    return k == 0 ? 2.0 * bm.at(i, 0) : 0.0;
                },
                1, motions[r]);
            const double m_true = motions[r].at(g.nt, 0) * motions[r].at(g.nt, 0) - g.horizon;
            res_t[r] = mhat[g.nt] - m_true;
        }
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) sq[i] = res_t[i] * res_t[i];
        CHECK(std::sqrt(mean(sq)) <= 3.0 * std::sqrt(2.0 * g.horizon * g.dt));
    }

    SUBCASE("quadratic-variation residual halves with dt (refinement study)") {
        auto rms_residual = [](int nt, std::uint64_t master) {
            const Grid g = make_grid(1.0, 1.0, nt, 8);
            const std::size_t n = 2000;
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const BasisMotions bm =
                    BasisMotions::from_noise(NoiseSheet::sample(g, SeedSpec{master, r}));
                const std::vector<double> mhat = reconstruct_with(
                    [](int i, int k, const BasisMotions& b) {
                        return k == 0 ? 2.0 * b.at(i, 0) : 0.0;
                    },
                    1, bm);
                const double m_true = bm.at(g.nt, 0) * bm.at(g.nt, 0) - g.horizon;
                acc += (mhat[g.nt] - m_true) * (mhat[g.nt] - m_true);
            }
            return std::sqrt(acc / n);
        };
        const double coarse = rms_residual(16, 401);
        const double fine = rms_residual(64, 402);
        // residual RMS scales as sqrt(2 T dt): quartering dt halves it
        CHECK(fine < 0.7 * coarse);
        CHECK(fine > 0.3 * coarse);
    }

    SUBCASE("fitted projection reproduces M pathwise for the linear case") {
        ProjectionOptions opts;
        opts.basis_size = 2;
        opts.poly_degree = 1;
        const auto paths = make_paths(motions, [](const BasisMotions& bm, int i) {
            return bm.at(i, 0);
        });
        const MartingaleProjection proj = project_martingale(paths, motions, opts);
        double worst = 0.0;
        for (std::size_t r = 0; r < 32; ++r) {
            const std::vector<double> mhat = reconstruct(proj, motions[r]);
            for (int i = 0; i <= g.nt; ++i)
                worst = std::max(worst, std::abs(mhat[i] - paths[r][i]));
        }
        CHECK(worst < 0.05);
    }
}

TEST_CASE("representation isometry: Var[M(T)] = sum_k sum_i E[X_k^2] dt") {
    const Grid g = make_grid(1.0, 1.0, 16, 8);
    const std::size_t n = 10000;
    const std::vector<BasisMotions> motions = sample_motions(g, n, 91);
    const auto paths = make_paths(motions, [&g](const BasisMotions& bm, int i) {
        return bm.at(i, 0) * bm.at(i, 0) - g.time(i) + 0.5 * bm.at(i, 1);
    });
    ProjectionOptions opts;
    opts.basis_size = 2;
    opts.poly_degree = 2;
    const MartingaleProjection proj = project_martingale(paths, motions, opts);

    std::vector<double> mt(n);
    double isometry = 0.0;
    for (int i = 0; i < g.nt; ++i) {
        std::vector<double> x2(n);
        for (int k = 0; k < opts.basis_size; ++k) {
            for (std::size_t r = 0; r < n; ++r) {
                const double x = proj.integrand(i, k, motions[r]);
                x2[r] = x * x;
            }
            isometry += mean(x2) * g.dt;
        }
    }
    for (std::size_t r = 0; r < n; ++r) mt[r] = reconstruct(proj, motions[r])[g.nt];
    const double var = sample_variance(mt);
    // Var[W^2(T)-T] = 2T^2, plus 0.25 T from the linear leg
    CHECK(std::abs(var - isometry) < 5.0 * var * std::sqrt(2.0 / n) + 0.02 * var);
}

TEST_CASE("tower property across basis refinement") {
    const Grid g = make_grid(1.0, 1.0, 12, 8);
    const std::size_t n = 12000;
    const std::vector<BasisMotions> motions = sample_motions(g, n, 73);
    // M depends on W_1 (nonlinearly) and W_3; the m = 2 projection must kill
    // the W_3 leg and keep X_1 = 2 W_1
    const auto paths = make_paths(motions, [&g](const BasisMotions& bm, int i) {
        return bm.at(i, 0) * bm.at(i, 0) - g.time(i) + 0.7 * bm.at(i, 2);
    });

    ProjectionOptions wide;
    wide.basis_size = 4;
    wide.poly_degree = 2;
    const MartingaleProjection proj_n = project_martingale(paths, motions, wide);

    // project the n-basis reconstruction onto the smaller basis
    std::vector<std::vector<double>> recon(n);
    for (std::size_t r = 0; r < n; ++r) recon[r] = reconstruct(proj_n, motions[r]);
    ProjectionOptions narrow;
    narrow.basis_size = 2;
    narrow.poly_degree = 2;
    const MartingaleProjection proj_mn = project_martingale(recon, motions, narrow);
    const MartingaleProjection proj_m = project_martingale(paths, motions, narrow);

    // the two small-basis projections agree within Monte Carlo error
    for (int i = 1; i < g.nt; ++i) {
        for (int k = 0; k < 2; ++k)
            for (int p = 0; p <= 2; ++p)
                CHECK(std::abs(proj_mn.coef[i](k, p) - proj_m.coef[i](k, p)) < 0.08);
        CHECK(std::abs(proj_m.coef[i](0, 1) - 2.0) / 2.0 < 0.06);
    }
}

TEST_CASE("reconstructed process passes the martingale increment test") {
    const Grid g = make_grid(1.0, 1.0, 16, 8);
    const std::size_t n = 6000;
    const std::vector<BasisMotions> motions = sample_motions(g, n, 135);
    const auto paths = make_paths(motions, [&g](const BasisMotions& bm, int i) {
        return bm.at(i, 0) * bm.at(i, 0) - g.time(i);
    });
    ProjectionOptions opts;
    opts.basis_size = 2;
    opts.poly_degree = 2;
    const MartingaleProjection proj = project_martingale(paths, motions, opts);
    std::vector<std::vector<double>> recon(n);
    for (std::size_t r = 0; r < n; ++r) recon[r] = reconstruct(proj, motions[r]);
    const MartingaleTestResult t = martingale_increment_test(recon, motions, 2, 0.01);
    CHECK_FALSE(t.reject);

    // a non-martingale fails the same test
    std::vector<std::vector<double>> drifting = recon;
    for (auto& path : drifting)
        for (std::size_t i = 0; i < path.size(); ++i) path[i] += 0.05 * static_cast<double>(i);
    const MartingaleTestResult bad = martingale_increment_test(drifting, motions, 2, 0.01);
    CHECK(bad.reject);
}

TEST_CASE("regression errors") {
    const Grid g = make_grid(1.0, 1.0, 8, 8);
    const std::vector<BasisMotions> motions = sample_motions(g, 30, 777);
    const auto paths = make_paths(motions, [](const BasisMotions& bm, int i) {
        return bm.at(i, 0);
    });
    ProjectionOptions opts;
    opts.basis_size = 4;
    opts.poly_degree = 2; // 12 features vs 30 replicas: too thin
    CHECK_THROWS_AS(project_martingale(paths, motions, opts), ConfigError);
    opts.basis_size = 20; // more motions than cells
    CHECK_THROWS_AS(project_martingale(paths, motions, opts), ConfigError);
}
