#include "spdelab/tci_constants.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace spdelab {

namespace {

constexpr double kLogOverflow = 700.0; // ~log(DBL_MAX)

double checked_exp(double exponent, const char* what) {
    if (!(exponent < kLogOverflow)) {
        std::ostringstream msg;
        msg << what << ": exponent " << exponent << " overflows double range";
        throw NumericError(msg.str());
    }
    return std::exp(exponent);
}

} // namespace

double conjugate_exponent(double alpha) {
    if (!(alpha > 1.0)) throw DomainError("conjugate_exponent: alpha must exceed 1");
    return alpha / (alpha - 1.0);
}

double c_infinity(double g_total, double l_g, double T) {
    if (g_total < 0.0 || l_g < 0.0 || T < 0.0)
        throw DomainError("c_infinity: inputs must be nonnegative");
    return 2.0 * g_total * checked_exp(2.0 * l_g * l_g * T * T, "c_infinity");
}

double c_two_alpha(const LipschitzData& data, double g_total, double g_alpha,
                   double T, double D, double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw DomainError("c_two_alpha: alpha must lie in (1,2)");
    if (data.k_sigma <= 0.0)
        throw DomainError("c_two_alpha: K_sigma must be positive");
    if (g_total < 0.0 || g_alpha < 0.0 || T <= 0.0 || D <= 0.0 || data.l_sigma < 0.0)
        throw DomainError("c_two_alpha: invalid inputs");
    const double beta = conjugate_exponent(alpha);

    // exponent = (T/beta) * 3^(2b-1) * L^(2b) * (g_alpha^(b/a) + g_total^b T^(b/a))
    double exponent = 0.0;
    if (data.l_sigma > 0.0) {
        const double log_pre =
            std::log(T / beta) + (2.0 * beta - 1.0) * std::log(3.0) +
            2.0 * beta * std::log(data.l_sigma);
        double inner = 0.0;
        if (g_alpha > 0.0)
            inner += checked_exp((beta / alpha) * std::log(g_alpha), "c_two_alpha inner g_alpha");
        if (g_total > 0.0)
            inner += checked_exp(beta * std::log(g_total) + (beta / alpha) * std::log(T),
                                 "c_two_alpha inner g_total");
        if (inner > 0.0) exponent = checked_exp(log_pre + std::log(inner), "c_two_alpha exponent");
    }

    const double prefactor_log = std::log(T) + std::log(D) +
                                 (2.0 - 1.0 / beta) * std::log(3.0) +
                                 2.0 * std::log(data.k_sigma);
    if (g_total == 0.0) return 0.0;
    return checked_exp(prefactor_log + std::log(g_total) + exponent, "c_two_alpha");
}

AlphaOptimum optimize_alpha(const LipschitzData& data, double g_total,
                            const std::function<double(double)>& g_alpha_of,
                            double T, double D) {
    const double lo = 1.0 + 1e-3;
    const double hi = 2.0 - 1e-3;

    auto objective = [&](double alpha) {
        try {
            const double c = c_two_alpha(data, g_total, g_alpha_of(alpha), T, D, alpha);
            return std::isfinite(c) ? std::log(c) : std::numeric_limits<double>::infinity();
        } catch (const NumericError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    // coarse scan to bracket the minimum, then golden-section refinement
    const int scan_pts = 33;
    std::vector<double> xs(scan_pts), fs(scan_pts);
    int best = 0;
    for (int i = 0; i < scan_pts; ++i) {
        xs[i] = lo + (hi - lo) * i / (scan_pts - 1);
        fs[i] = objective(xs[i]);
        if (fs[i] < fs[best]) best = i;
    }
    if (!std::isfinite(fs[best]))
        throw NumericError("optimize_alpha: objective non-finite across the whole bracket");

    double a = xs[best > 0 ? best - 1 : best];
    double b = xs[best + 1 < scan_pts ? best + 1 : best];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-10; ++it) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a);
            f1 = objective(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a);
            f2 = objective(x2);
        }
    }
    double alpha_star = 0.5 * (a + b);
    double f_star = objective(alpha_star);
    // endpoints may win when the objective is monotone on the bracket
    for (double cand : {lo, hi, xs[best]}) {
        const double fc = objective(cand);
        if (fc < f_star) { f_star = fc; alpha_star = cand; }
    }
    AlphaOptimum out;
    out.alpha_star = alpha_star;
    out.c_star = std::exp(f_star);
    return out;
}

ConcentrationBound concentration_bound(double c, double r) {
    if (!(c > 0.0)) throw DomainError("concentration_bound: C must be positive");
    ConcentrationBound out;
    out.r0 = 2.0 * std::sqrt(2.0 * c * std::log(2.0));
    out.bound = std::exp(-r * r / (8.0 * c));
    return out;
}

double mgf_bound(double c, double a) {
    if (!(c > 0.0)) throw DomainError("mgf_bound: C must be positive");
    return checked_exp(a * a * c / 2.0, "mgf_bound");
}

} // namespace spdelab
