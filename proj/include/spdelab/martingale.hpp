#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spdelab/noise.hpp"

namespace spdelab {

// Coordinate Brownian motions of the discrete white-noise filtration:
// W_k(t_i) = sum_{i'<i} dW[i'][k] / sqrt(dx), one motion per space cell, with
// independent increments of variance dt per step.
struct BasisMotions {
    Grid grid;
    Eigen::MatrixXd w; // (nt+1) x nx, column k is W_k

    static BasisMotions from_noise(const NoiseSheet& noise);

    double at(int i, int k) const { return w(i, k); }
    double increment(int i, int k) const { return w(i + 1, k) - w(i, k); }
};

struct ProjectionOptions {
    int basis_size = 2;  // number of coordinate motions used as integrators
    int poly_degree = 2; // features: W_k(t_i)^p, p = 0..degree
};

// Coefficients of the least-squares Monte Carlo projection of a martingale
// onto the noise increments: X_k(t_i) = sum_p coef[i](k,p) W_k(t_i)^p.
struct MartingaleProjection {
    ProjectionOptions opts;
    Grid grid;
    std::vector<Eigen::MatrixXd> coef; // nt entries of shape basis_size x (degree+1)

    double integrand(int i, int k, const BasisMotions& motions) const;
};

// Per time step, regresses the martingale increment M(t_{i+1}) - M(t_i) on
// the features W_k(t_i)^p * dW_k(i). Structurally zero columns are dropped;
// a genuine rank deficiency among the remaining columns is an error naming
// the step.
MartingaleProjection project_martingale(std::span<const std::vector<double>> m_paths,
                                        std::span<const BasisMotions> motions,
                                        const ProjectionOptions& opts);

// Discrete stochastic integral sum_k sum_{i'<i} X_k(t_{i'}) dW_k(i') with the
// fitted coefficients. Reconstructs M - M(0).
std::vector<double> reconstruct(const MartingaleProjection& proj, const BasisMotions& motions);

// Same with a caller-supplied integrand (closed-form test cases).
std::vector<double> reconstruct_with(
    const std::function<double(int i, int k, const BasisMotions&)>& integrand,
    int basis_size, const BasisMotions& motions);

struct MartingaleTestResult {
    double chi2 = 0.0;
    double threshold = 0.0;
    int dof = 0;
    bool reject = false;
};

// Increment-regression martingale check: regresses increments on past basis
// values pooled over steps; under the martingale property all coefficients
// vanish. Heteroskedasticity-robust (HC0) chi-square statistic.
MartingaleTestResult martingale_increment_test(std::span<const std::vector<double>> m_paths,
                                               std::span<const BasisMotions> motions,
                                               int basis_size, double alpha);

} // namespace spdelab
