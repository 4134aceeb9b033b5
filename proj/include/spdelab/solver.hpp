#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spdelab/drift.hpp"
#include "spdelab/field.hpp"
#include "spdelab/heat_kernel.hpp"
#include "spdelab/model.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

// One-step exponential-integrator (semigroup splitting) reading of the mild
// formulation:
//   u_{i+1} = P(dt) [ u_i + g(t_i,.,u_i) dt + sigma(t_i,.,u_i) dW~_i/dx
//                         + sigma(t_i,.,u_i) X_i dt ],
// with P(dt) the exact discrete semigroup step. The dW/dx scaling reproduces
// the Walsh isometry Var = sum G^2 dx dt at grid scale. Coefficients are
// evaluated at the left endpoint (predictable evaluation).
//
// When drift is present the noise argument is interpreted as the tilted sheet
// (a Brownian sheet under the tilted measure) and u carries the extra
// sigma*X dt term; x_out (if non-null) receives the drift values realized
// along u.
FieldPath solve(const ModelSpec& model, const HeatKernel& kernel, const NoiseSheet& noise,
                const DriftSpec* drift = nullptr, DriftField* x_out = nullptr);

struct CoupledPair {
    FieldPath u; // tilted dynamics: carries the sigma*X dt drift term
    FieldPath v; // same sheet, no drift term; its law under Q is P
    DriftField x;
    double x_norm2 = 0.0; // ||X||_{T,2}^2 = sum X^2 dt dx
};

// Girsanov coupling: u and v driven by the same sheet, sharing the initial
// convolution, u with the drift term and v without.
CoupledPair solve_pair(const ModelSpec& model, const HeatKernel& kernel,
                       const NoiseSheet& noise, const DriftSpec& drift);

// max over all grid nodes of |u|; a grid lower bound of the continuum sup.
double sup_norm(const FieldPath& path);
double sup_norm_diff(const FieldPath& a, const FieldPath& b);

// sqrt( sum_{i=1..nt, j=0..nx-1} u(t_i,x_j)^2 dt dx ): right rule in time,
// left rule in space, so a constant field c gives exactly c*sqrt(T D).
double l2_norm(const FieldPath& path);
double l2_norm_diff(const FieldPath& a, const FieldPath& b);

// ||X||_{T,2}^2 over the cell grid.
double drift_norm2(const DriftField& x);

struct MomentEstimate {
    double value = 0.0; // sup_{t,x} mean |u(t,x)|^p
    double lo = 0.0;
    double hi = 0.0;
    int arg_i = 0;
    int arg_j = 0;
    bool finite = true;
};

// Monte Carlo estimate of sup_{t,x} E|u(t,x)|^p with a bootstrap CI.
MomentEstimate moment_check(std::span<const FieldPath> paths, double p,
                            int resamples = 1000, std::uint64_t seed = 7);

} // namespace spdelab
