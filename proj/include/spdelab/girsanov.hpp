#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spdelab/parallel.hpp"
#include "spdelab/solver.hpp"
#include "spdelab/stats.hpp"

namespace spdelab {

struct EntropyEstimate {
    double estimate = 0.0; // (1/2) mean ||X||^2_{T,2}
    double lo = 0.0;
    double hi = 0.0;
    double se = 0.0;
    bool exact = false; // deterministic drifts have zero statistical error
};

// Relative entropy H(Q|P) = (1/2) E~ ||X||^2_{T,2}, estimated from the drift
// realized along tilted-dynamics replicas.
EntropyEstimate entropy_from_norms(std::span<const double> x_norm2, bool exact,
                                   int resamples, std::uint64_t seed);
EntropyEstimate entropy(const DriftSpec& drift, std::span<const FieldPath> q_paths,
                        int resamples = 1000, std::uint64_t seed = 11);

// Discrete Radon-Nikodym exponent along one noise realization:
//   M(t_i) = exp( sum_{i'<i,j} X dW - (1/2) sum_{i'<i,j} X^2 dt dx ),
// with dW the raw (untilted) increments. M(0) = 1.
std::vector<double> rn_exponent(const DriftField& x, const NoiseSheet& raw_noise);

struct GronwallDiagnostics {
    std::vector<double> m;        // sup_{s<=t_i} sup_x mean|u-v|^2 (mean inside max)
    std::vector<double> nu;       // mean of pathwise running sup (max inside mean)
    std::vector<double> rhs;      // 3 L_s^2 (H*m) + 3 G_T L_g^2 int m + 3 K^2 G_T E||X||^2
    std::vector<double> slack;    // rhs - m, per slice
    std::vector<double> slack_se; // bootstrap SE of the slack
    bool ok = true;               // slack >= -2 SE at every slice

    // companion inequality chain, checked on the same samples:
    // E||u-v||^2_{T,2} <= T D m(T) -- exact algebra on sample means
    double trivial_lhs = 0.0, trivial_rhs = 0.0;
    bool trivial_ok = true;
    // sup mode only: nu(t) <= 2 L_g^2 T int nu + 2 G_T E||X||^2, which holds
    // pathwise at grid scale, so the sample version carries no MC tolerance
    std::vector<double> sup_chain_slack;
    bool sup_chain_ok = true;
    // L2 mode only, at the experiment's beta: the powered self-referential
    // inequality and the Gronwall closure m(T) <= C/(T D) E||X||^2
    std::vector<double> power_chain_slack;
    bool power_chain_ok = true;
    double final_slack = 0.0;
    bool final_ok = true;

    bool all_ok() const {
        return ok && trivial_ok && sup_chain_ok && power_chain_ok && final_ok;
    }
};

struct TciReport {
    std::string mode;           // "sup" or "l2"
    std::size_t replicas = 0;
    std::uint64_t seed = 0;
    std::string constant_label; // "c_infinity" or "c_two_alpha"
    double constant_value = 0.0;
    double alpha = 0.0;         // set in l2 mode
    EntropyEstimate entropy;
    Interval lhs;               // sqrt(mean distance^2)
    Interval rhs_ci;            // sqrt(C * mean ||X||^2)
    double rhs = 0.0;
    Interval ratio;             // lhs / rhs; defined as 0 when rhs = 0
    bool failed = false;        // ratio lower CI above 1
    GronwallDiagnostics gronwall;
    // Wasserstein-form right side sqrt(2 C entropy); equals rhs by the entropy formula
    double rhs_wasserstein_form = 0.0;
    // per-replica columns, in replica order (for CSV export)
    std::vector<double> rep_x_norm2, rep_sup, rep_l2;
    // retained path subsample for transport cross-checks (may be empty)
    std::vector<FieldPath> u_sample, v_sample;
};

struct ExperimentOptions {
    int bootstrap_resamples = 1000;
    int keep_paths = 0; // retain the first N (u,v) pairs in the report
    ExecMode exec = default_exec_mode();
};

// Theorem-1 experiment (sup distance, sigma == 1 required): per replica solve
// the coupled pair under the tilted measure, then compare
//   lhs = sqrt(mean sup|u-v|^2)  against  rhs = sqrt(C_inf * mean ||X||^2).
TciReport tci_experiment_sup(const ModelSpec& model, const HeatKernel& kernel,
                             const DriftSpec& drift, double c_inf,
                             std::size_t n_replicas, std::uint64_t master_seed,
                             const ExperimentOptions& opts = {});

// Theorem-2 experiment (L2 distance, bounded sigma).
TciReport tci_experiment_l2(const ModelSpec& model, const HeatKernel& kernel,
                            const DriftSpec& drift, double c_two, double alpha,
                            std::size_t n_replicas, std::uint64_t master_seed,
                            const ExperimentOptions& opts = {});

} // namespace spdelab
