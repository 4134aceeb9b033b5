// Benchmark comparing the serial reference path against the OpenMP path on the
// replica-parallel kernels. Both must produce identical results; only the wall
// time differs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "spdelab/girsanov.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/transport.hpp"

using namespace spdelab;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

ModelSpec additive_model(const Grid& grid) {
    ModelSpec m;
    m.g = [](double, double, double) { return 0.0; };
    m.sigma = [](double, double, double) { return 1.0; };
    m.u0 = [](double) { return 0.0; };
    m.lipschitz = LipschitzData{0.0, 0.0, 1.0};
    m.op = OperatorSpec::constant(1.0, 0.0, Boundary::Dirichlet, grid);
    return m;
}

void report(const char* name, double serial_ms, double omp_ms) {
    std::printf("%-28s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx\n", name, serial_ms,
                omp_ms, omp_ms > 0.0 ? serial_ms / omp_ms : 0.0);
}

} // namespace

int main() {
    std::printf("thread budget: %d\n", thread_budget());

    { // white-noise sampling
        const Grid g = make_grid(1.0, 1.0, 128, 128);
        const std::size_t n = 256;
        std::vector<double> sink(n);
        auto run = [&](ExecMode mode) {
            parallel_for(
                n,
                [&](std::size_t r) {
                    const NoiseSheet s = NoiseSheet::sample(g, SeedSpec{42, r});
                    sink[r] = s.at(g.nt - 1, g.nx - 1);
                },
                mode);
        };
        const double ts = time_ms([&] { run(ExecMode::Serial); });
        const double tp = time_ms([&] { run(ExecMode::OpenMP); });
        report("noise sampling (256x128x128)", ts, tp);
    }

    { // additive-noise trajectories
        const Grid g = make_grid(0.5, 1.0, 64, 64);
        const ModelSpec model = additive_model(g);
        const HeatKernel kernel(model.op, g);
        const std::size_t n = 512;
        std::vector<double> sink(n);
        auto run = [&](ExecMode mode) {
            parallel_for(
                n,
                [&](std::size_t r) {
                    const NoiseSheet s = NoiseSheet::sample(g, SeedSpec{7, r});
                    sink[r] = l2_norm(solve(model, kernel, s));
                },
                mode);
        };
        const double ts = time_ms([&] { run(ExecMode::Serial); });
        const double tp = time_ms([&] { run(ExecMode::OpenMP); });
        report("solve (512 replicas, 64^2)", ts, tp);
        // identical results from both paths
        std::vector<double> serial_copy = sink;
        run(ExecMode::Serial);
        for (std::size_t r = 0; r < n; ++r) {
            if (sink[r] != serial_copy[r]) {
                std::printf("MISMATCH at replica %zu\n", r);
                return 1;
            }
        }
    }

    { // coupled pairs through the experiment driver
        const Grid g = make_grid(0.5, 1.0, 48, 48);
        ModelSpec model = additive_model(g);
        model.g = [](double, double, double u) { return std::sin(u); };
        model.lipschitz.l_g = 1.0;
        const HeatKernel kernel(model.op, g);
        kernel.g_total(); // warm the lazy caches so both paths time the replicas
        kernel.h_values();
        const DriftSpec drift = DriftSpec::constant(1.0);
        ExperimentOptions opts;
        opts.bootstrap_resamples = 100;
        auto run = [&](ExecMode mode) {
            opts.exec = mode;
            return tci_experiment_sup(model, kernel, drift, 1.0, 256, 99, opts).lhs.estimate;
        };
        double ls = 0.0, lp = 0.0;
        const double ts = time_ms([&] { ls = run(ExecMode::Serial); });
        const double tp = time_ms([&] { lp = run(ExecMode::OpenMP); });
        report("tci experiment (256 pairs)", ts, tp);
        if (ls != lp) {
            std::printf("MISMATCH between serial and OpenMP experiment\n");
            return 1;
        }
    }

    { // cost matrix + assignment
        const Grid g = make_grid(0.25, 1.0, 32, 32);
        const ModelSpec model = additive_model(g);
        const HeatKernel kernel(model.op, g);
        std::vector<FieldPath> a(128), b(128);
        for (std::size_t r = 0; r < a.size(); ++r) {
            a[r] = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{1, r}));
            b[r] = solve(model, kernel, NoiseSheet::sample(g, SeedSpec{2, r}));
        }
        const SampleCloud ca = SampleCloud::from_paths(a, CloudMetric::L2Norm);
        const SampleCloud cb = SampleCloud::from_paths(b, CloudMetric::L2Norm);
        double w = 0.0;
        const double t = time_ms([&] { w = wasserstein2_exact(ca, cb).w2; });
        std::printf("%-28s %9.1f ms   (w2 = %.4f)\n", "exact W2 (n=128)", t, w);
    }

    return 0;
}
