#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spdelab/field.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/operators.hpp"

namespace spdelab {

struct KernelOptions {
    double tol_neg = 1e-10;   // relative negativity tolerance for kernel entries
    double mass_tol = 1e-8;   // conservation tolerance (Neumann/Periodic)
    double cond_limit = 1e8;  // eigenbasis condition cap before Pade fallback
    int quad_points = 800;    // nodes of the t = s^2 substitution quadrature
};

// exp(tA) evaluator. Diagonalizes once and reuses the eigenbasis for every t;
// falls back to scaling-and-squaring when the basis is ill-conditioned.
class Semigroup {
public:
    enum class Path { RealEigen, ComplexEigen, Pade };

    Semigroup() = default;
    Semigroup(Eigen::MatrixXd gen, double cond_limit);

    Eigen::MatrixXd at(double t) const;
    Path path() const { return path_; }
    int size() const { return static_cast<int>(gen_.rows()); }
    const Eigen::MatrixXd& generator() const { return gen_; }

private:
    Path path_ = Path::Pade;
    Eigen::MatrixXd gen_;
    Eigen::MatrixXd vr_, wr_;
    Eigen::VectorXd lam_r_;
    Eigen::MatrixXcd vc_, wc_;
    Eigen::VectorXcd lam_c_;
};

// Discrete heat kernel of the operator with its boundary conditions, plus the
// kernel functionals feeding the TCI constants. The table slice at time t_i is
// the propagator P(t_i) = exp(t_i A); kernel values are G(t_i,x_j,y_k) =
// P(t_i)(j,k)/dx so that sum_k G*dx approximates the unit kernel mass.
class HeatKernel {
public:
    HeatKernel(OperatorSpec op, Grid grid, KernelOptions opt = {});

    const Grid& grid() const { return grid_; }
    const OperatorSpec& op() const { return op_; }
    const KernelOptions& options() const { return opt_; }
    const Semigroup& semigroup() const { return semigroup_; }

    int state_size() const { return n_; }
    int node_of(int k) const { return state_node(op_.boundary, k); }
    int cell_of(int k) const { return state_cell(op_.boundary, k, grid_.nx); }
    double state_x(int k) const { return grid_.space(node_of(k)); }

    // P(dt), the solver's one-step propagator.
    const Eigen::MatrixXd& step() const { return step_; }
    // P(t_i); validated (negativity floor, mass check) and cached.
    const Eigen::MatrixXd& slice(int i) const;
    Eigen::MatrixXd propagator(double t) const { return semigroup_.at(t); }
    double kernel_value(int i, int j, int k) const { return slice(i)(j, k) / grid_.dx; }

    // H(t_i) = max_x sum_y G(t_i,x,y)^2 dx, for i = 0..nt. H(0) = 1/dx.
    const std::vector<double>& h_values() const;
    double h_at(double t) const;
    // integral of H over (0,T], same substitution quadrature as g_total
    double h_time_integral() const;

    double g_total() const;
    double g_alpha(double alpha) const;

    // I(t_i, x_j) = sum_k G(t_i,x_j,y_k) u0(y_k) dx on all nodes.
    FieldPath initial_convolution(std::span<const double> u0_nodes) const;

    Eigen::VectorXd restrict_to_state(std::span<const double> nodes) const;
    // Writes a state vector into row i of a node field, filling boundary values
    // per the boundary condition.
    void extend_to_nodes(const Eigen::VectorXd& state, int i, FieldPath& out) const;

private:
    struct QuadCache {
        std::vector<double> t, w;
        std::vector<Eigen::VectorXd> row_sq; // per node: sum_k P(t)(j,k)^2 / dx
    };

    void validate_slice(Eigen::MatrixXd& p, int i) const;
    const QuadCache& quad() const;

    OperatorSpec op_;
    Grid grid_;
    KernelOptions opt_;
    int n_ = 0;
    Semigroup semigroup_;
    Eigen::MatrixXd step_;
    // caches fill lazily under the mutex; entries never change once set, so
    // returned references stay valid and the table is shareable across workers
    mutable std::mutex cache_mutex_;
    mutable std::vector<Eigen::MatrixXd> table_;  // built lazily, index 0..nt
    mutable std::vector<char> table_ready_;
    mutable std::vector<double> h_;
    mutable std::unique_ptr<QuadCache> quad_;
    mutable double g_total_ = -1.0;
};

} // namespace spdelab
