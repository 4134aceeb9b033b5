#pragma once

#include <functional>

#include "spdelab/errors.hpp"

namespace spdelab {

// Lipschitz/boundedness data of the reaction and noise coefficients.
struct LipschitzData {
    double l_g = 0.0;     // Lipschitz constant of g in u
    double l_sigma = 0.0; // Lipschitz constant of sigma in u
    double k_sigma = 0.0; // uniform bound of sigma
};

// beta with 1/alpha + 1/beta = 1.
double conjugate_exponent(double alpha);

// Sup-norm T2 constant: 2 * g_total * exp(2 L_g^2 T^2). Overflow is an error,
// never a silent infinity.
double c_infinity(double g_total, double l_g, double T);

// L2 T2 constant for a given alpha in (1,2):
//   T*D * 3^(2 - 1/beta) * K^2 * g_total
//     * exp[ (T/beta) * 3^(2 beta - 1) * L_sigma^(2 beta)
//            * (g_alpha^(beta/alpha) + g_total^beta * T^(beta/alpha)) ].
// The exponential factor is assembled in log space to delay overflow.
double c_two_alpha(const LipschitzData& data, double g_total, double g_alpha,
                   double T, double D, double alpha);

struct AlphaOptimum {
    double alpha_star = 0.0;
    double c_star = 0.0;
};

// Minimizes alpha -> c_two_alpha over the clamped bracket
// [1+1e-3, 2-1e-3] (both endpoints of (1,2) are excluded by the theory).
// g_alpha_of evaluates alpha -> g_alpha for this kernel.
AlphaOptimum optimize_alpha(const LipschitzData& data, double g_total,
                            const std::function<double(double)>& g_alpha_of,
                            double T, double D);

struct ConcentrationBound {
    double bound = 0.0; // exp(-r^2 / (8C))
    double r0 = 0.0;    // 2 sqrt(2 C ln 2); the bound is only claimed for r >= r0
};

ConcentrationBound concentration_bound(double c, double r);

// Sub-Gaussian moment generating bound exp(a^2 C / 2) for centered 1-Lipschitz
// images of a T1(C) law.
double mgf_bound(double c, double a);

} // namespace spdelab
