#pragma once

#include <functional>

#include "spdelab/field.hpp"
#include "spdelab/operators.hpp"
#include "spdelab/tci_constants.hpp"

namespace spdelab {

using CoefficientFn = std::function<double(double t, double x, double u)>;
using InitialFn = std::function<double(double x)>;

// Reaction-diffusion model data for the stochastic heat equation
//   du = L u dt + g(t,x,u) dt + sigma(t,x,u) dW.
// The declared Lipschitz data must dominate the actual coefficients; the
// solver enforces |sigma| <= K_sigma pointwise and lipschitz_audit spot-checks
// the rest along trajectories.
struct ModelSpec {
    CoefficientFn g;
    CoefficientFn sigma;
    InitialFn u0;
    LipschitzData lipschitz;
    OperatorSpec op;
};

struct LipschitzAudit {
    double g_slope_max = 0.0;     // largest sampled |g(u+h)-g(u)|/h
    double sigma_slope_max = 0.0; // same for sigma
    double sigma_abs_max = 0.0;   // largest sampled |sigma|
    bool ok = true;
};

// Finite-difference Lipschitz estimate of g and sigma along a trajectory.
// Fails (ok = false) when a sampled slope exceeds the declared constant by
// more than rel_tol, or |sigma| exceeds K_sigma.
LipschitzAudit lipschitz_audit(const ModelSpec& model, const FieldPath& path,
                               double rel_tol = 1e-6);

} // namespace spdelab
