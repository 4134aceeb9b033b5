#include "spdelab/heat_kernel.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "spdelab/errors.hpp"

namespace spdelab {

Semigroup::Semigroup(Eigen::MatrixXd gen, double cond_limit) : gen_(std::move(gen)) {
    const int n = static_cast<int>(gen_.rows());
    Eigen::EigenSolver<Eigen::MatrixXd> es(gen_);
    if (es.info() != Eigen::Success) {
        path_ = Path::Pade;
        return;
    }
    const Eigen::MatrixXcd v = es.eigenvectors();
    const Eigen::VectorXcd lam = es.eigenvalues();

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(v);
    const Eigen::MatrixXcd w = lu.solve(Eigen::MatrixXcd::Identity(n, n));

    const double cond = v.cwiseAbs().rowwise().sum().maxCoeff() *
                        w.cwiseAbs().rowwise().sum().maxCoeff();
    const Eigen::MatrixXd recon = (v * lam.asDiagonal() * w).real();
    const double scale = gen_.cwiseAbs().maxCoeff() + 1.0;
    const double err = (recon - gen_).cwiseAbs().maxCoeff() / scale;
    if (!(cond < cond_limit) || !(err < 1e-8)) {
        path_ = Path::Pade;
        return;
    }

    const double lam_scale = lam.cwiseAbs().maxCoeff() + 1.0;
    if (lam.imag().cwiseAbs().maxCoeff() <= 1e-12 * lam_scale &&
        v.imag().cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff()) {
        path_ = Path::RealEigen;
        vr_ = v.real();
        wr_ = w.real();
        lam_r_ = lam.real();
    } else {
        path_ = Path::ComplexEigen;
        vc_ = v;
        wc_ = w;
        lam_c_ = lam;
    }
}

Eigen::MatrixXd Semigroup::at(double t) const {
    if (t < 0.0) throw DomainError("Semigroup::at: t must be nonnegative");
    switch (path_) {
        case Path::RealEigen:
            return vr_ * (lam_r_ * t).array().exp().matrix().asDiagonal() * wr_;
        case Path::ComplexEigen:
            return (vc_ * (lam_c_ * t).array().exp().matrix().asDiagonal() * wc_).real();
        case Path::Pade: {
            const Eigen::MatrixXd scaled = gen_ * t;
            const Eigen::MatrixXd result = scaled.exp();
            if (!result.allFinite())
                throw NumericError(
                    "Semigroup::at: matrix exponential failed after eigendecomposition "
                    "fallback (ill-conditioned generator)");
            return result;
        }
    }
    throw NumericError("Semigroup::at: unreachable");
}

HeatKernel::HeatKernel(OperatorSpec op, Grid grid, KernelOptions opt)
    : op_(std::move(op)), grid_(grid), opt_(opt) {
    n_ = spdelab::state_size(op_.boundary, grid_.nx);
    if (n_ < 2) throw ConfigError("HeatKernel: grid too coarse for the boundary condition");
    semigroup_ = Semigroup(build_generator(op_, grid_), opt_.cond_limit);
    step_ = semigroup_.at(grid_.dt);
    validate_slice(step_, 1);
    table_.resize(grid_.nt + 1);
    table_ready_.assign(grid_.nt + 1, 0);
}

void HeatKernel::validate_slice(Eigen::MatrixXd& p, int i) const {
    const double peak = p.cwiseAbs().maxCoeff();
    const double floor_tol = opt_.tol_neg * (peak > 0.0 ? peak : 1.0);
    const double min_val = p.minCoeff();
    if (min_val < -floor_tol) {
        std::ostringstream msg;
        msg << "kernel slice t_" << i << ": negative value " << min_val
            << " beyond tolerance " << -floor_tol
            << " (refine the grid or switch advection to upwind)";
        throw NumericError(msg.str());
    }
    p = p.cwiseMax(0.0);

    // discrete kernel mass: sum_k G dx = row sum of P
    for (int j = 0; j < n_; ++j) {
        const double mass = p.row(j).sum();
        if (op_.boundary == Boundary::Dirichlet) {
            if (mass > 1.0 + opt_.mass_tol) {
                std::ostringstream msg;
                msg << "kernel slice t_" << i << ": Dirichlet mass " << mass << " exceeds 1";
                throw NumericError(msg.str());
            }
        } else if (std::abs(mass - 1.0) > opt_.mass_tol) {
            std::ostringstream msg;
            msg << "kernel slice t_" << i << ": mass " << mass << " not conserved";
            throw NumericError(msg.str());
        }
    }
}

const Eigen::MatrixXd& HeatKernel::slice(int i) const {
    if (i < 0 || i > grid_.nt) throw ConfigError("HeatKernel::slice: index out of range");
    const std::lock_guard<std::mutex> lock(cache_mutex_);
    if (!table_ready_[i]) {
        Eigen::MatrixXd p = (i == 0) ? Eigen::MatrixXd::Identity(n_, n_).eval()
                                     : semigroup_.at(grid_.time(i));
        if (i > 0) validate_slice(p, i);
        table_[i] = std::move(p);
        table_ready_[i] = 1;
    }
    return table_[i];
}

const std::vector<double>& HeatKernel::h_values() const {
    // fill the slice table first: slice() takes the cache mutex itself
    for (int i = 0; i <= grid_.nt; ++i) slice(i);
    const std::lock_guard<std::mutex> lock(cache_mutex_);
    if (h_.empty()) {
        std::vector<double> h(grid_.nt + 1);
        for (int i = 0; i <= grid_.nt; ++i) {
            h[i] = table_[i].array().square().rowwise().sum().maxCoeff() / grid_.dx;
        }
        h_ = std::move(h);
    }
    return h_;
}

double HeatKernel::h_at(double t) const {
    return semigroup_.at(t).array().square().rowwise().sum().maxCoeff() / grid_.dx;
}

const HeatKernel::QuadCache& HeatKernel::quad() const {
    const std::lock_guard<std::mutex> lock(cache_mutex_);
    if (!quad_) {
        auto q = std::make_unique<QuadCache>();
        const int nq = opt_.quad_points;
        const double smax = std::sqrt(grid_.horizon);
        const double ds = smax / nq;
        q->t.resize(nq);
        q->w.resize(nq);
        q->row_sq.resize(nq);
        for (int m = 0; m < nq; ++m) {
            // t = s^2 substitution regularizes the t^{-1/2} behavior of H near 0
            const double s = (m + 0.5) * ds;
            q->t[m] = s * s;
            q->w[m] = 2.0 * s * ds;
            q->row_sq[m] = semigroup_.at(q->t[m]).array().square().rowwise().sum() / grid_.dx;
        }
        quad_ = std::move(q);
    }
    return *quad_;
}

double HeatKernel::g_total() const {
    const QuadCache& q = quad();
    const std::lock_guard<std::mutex> lock(cache_mutex_);
    if (g_total_ < 0.0) {
        // integrate in t for each fixed x, then take the sup over x
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_);
        for (std::size_t m = 0; m < q.t.size(); ++m) acc += q.w[m] * q.row_sq[m];
        g_total_ = acc.maxCoeff();
    }
    return g_total_;
}

double HeatKernel::g_alpha(double alpha) const {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        std::ostringstream msg;
        msg << "g_alpha: alpha = " << alpha
            << " outside (1,2); the integral of H^alpha may diverge at the endpoints";
        throw DomainError(msg.str());
    }
    const QuadCache& q = quad();
    double acc = 0.0;
    for (std::size_t m = 0; m < q.t.size(); ++m) {
        acc += q.w[m] * std::pow(q.row_sq[m].maxCoeff(), alpha);
    }
    return acc;
}

double HeatKernel::h_time_integral() const {
    const QuadCache& q = quad();
    double acc = 0.0;
    for (std::size_t m = 0; m < q.t.size(); ++m) acc += q.w[m] * q.row_sq[m].maxCoeff();
    return acc;
}

Eigen::VectorXd HeatKernel::restrict_to_state(std::span<const double> nodes) const {
    if (static_cast<int>(nodes.size()) != grid_.nx + 1)
        throw ConfigError("restrict_to_state: expected nx+1 node values");
    Eigen::VectorXd s(n_);
    for (int k = 0; k < n_; ++k) s[k] = nodes[node_of(k)];
    return s;
}

void HeatKernel::extend_to_nodes(const Eigen::VectorXd& state, int i, FieldPath& out) const {
    for (int k = 0; k < n_; ++k) out.at(i, node_of(k)) = state[k];
    switch (op_.boundary) {
        case Boundary::Dirichlet:
            out.at(i, 0) = 0.0;
            out.at(i, grid_.nx) = 0.0;
            break;
        case Boundary::Periodic:
            out.at(i, grid_.nx) = state[0];
            break;
        case Boundary::Neumann:
            break;
    }
}

FieldPath HeatKernel::initial_convolution(std::span<const double> u0_nodes) const {
    const Eigen::VectorXd u0 = restrict_to_state(u0_nodes);
    FieldPath out(grid_);
    for (int i = 0; i <= grid_.nt; ++i) {
        const Eigen::VectorXd conv = slice(i) * u0;
        extend_to_nodes(conv, i, out);
    }
    return out;
}

} // namespace spdelab
