#include "spdelab/operators.hpp"

#include <cmath>
#include <sstream>

#include "spdelab/errors.hpp"

namespace spdelab {

std::string to_string(Boundary b) {
    switch (b) {
        case Boundary::Dirichlet: return "dirichlet";
        case Boundary::Neumann: return "neumann";
        case Boundary::Periodic: return "periodic";
    }
    return "?";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "dirichlet") return Boundary::Dirichlet;
    if (s == "neumann") return Boundary::Neumann;
    if (s == "periodic") return Boundary::Periodic;
    throw ConfigError("unknown boundary condition: " + s);
}

OperatorSpec OperatorSpec::constant(double a_val, double b_val, Boundary bc, const Grid& grid) {
    OperatorSpec op;
    op.a.assign(grid.nx + 1, a_val);
    op.b.assign(grid.nx + 1, b_val);
    op.boundary = bc;
    return op;
}

OperatorSpec OperatorSpec::from_functions(const std::function<double(double)>& a_fn,
                                          const std::function<double(double)>& b_fn,
                                          Boundary bc, const Grid& grid) {
    OperatorSpec op;
    op.a.resize(grid.nx + 1);
    op.b.resize(grid.nx + 1);
    for (int j = 0; j <= grid.nx; ++j) {
        op.a[j] = a_fn(grid.space(j));
        op.b[j] = b_fn(grid.space(j));
    }
    op.boundary = bc;
    return op;
}

int state_size(Boundary bc, int nx) {
    switch (bc) {
        case Boundary::Dirichlet: return nx - 1;
        case Boundary::Neumann: return nx + 1;
        case Boundary::Periodic: return nx;
    }
    return 0;
}

int state_node(Boundary bc, int k) {
    return bc == Boundary::Dirichlet ? k + 1 : k;
}

int state_cell(Boundary bc, int k, int nx) {
    const int node = state_node(bc, k);
    return node < nx ? node : -1;
}

Eigen::MatrixXd build_generator(const OperatorSpec& op, const Grid& grid) {
    const int nx = grid.nx;
    if (static_cast<int>(op.a.size()) != nx + 1 || static_cast<int>(op.b.size()) != nx + 1)
        throw ConfigError("build_generator: coefficient arrays must have nx+1 samples");
    for (int j = 0; j <= nx; ++j) {
        if (!(op.a[j] > 0.0) || !std::isfinite(op.a[j])) {
            std::ostringstream msg;
            msg << "build_generator: a(x_" << j << ") = " << op.a[j]
                << " violates the uniform ellipticity assumption";
            throw ConfigError(msg.str());
        }
    }

    const int n = state_size(op.boundary, nx);
    const double dx = grid.dx;
    const double inv_dx2 = 1.0 / (dx * dx);
    Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(n, n);

    // in-range accumulation; out-of-range targets are dropped (Dirichlet zeros)
    auto add = [&](int row, int col, double val) {
        if (col >= 0 && col < n) gen(row, col) += val;
    };

    for (int k = 0; k < n; ++k) {
        const int j = state_node(op.boundary, k);
        const double diff = 0.5 * op.a[j] * op.a[j] * inv_dx2;
        const double bj = op.b[j];

        if (op.boundary == Boundary::Periodic) {
            const int left = (k - 1 + n) % n;
            const int right = (k + 1) % n;
            gen(k, k) += -2.0 * diff;
            gen(k, left) += diff;
            gen(k, right) += diff;
            if (op.advection == AdvectionScheme::Central) {
                gen(k, right) += bj / (2.0 * dx);
                gen(k, left) -= bj / (2.0 * dx);
            } else if (bj >= 0.0) {
                gen(k, right) += bj / dx;
                gen(k, k) -= bj / dx;
            } else {
                gen(k, k) += bj / dx;
                gen(k, left) -= bj / dx;
            }
            continue;
        }

        const bool left_edge = (op.boundary == Boundary::Neumann && j == 0);
        const bool right_edge = (op.boundary == Boundary::Neumann && j == nx);
        if (left_edge) {
            // mirrored ghost: phi'' = 2(phi_1 - phi_0)/dx^2, phi' = 0
            gen(k, k) += -2.0 * diff;
            add(k, k + 1, 2.0 * diff);
            continue;
        }
        if (right_edge) {
            gen(k, k) += -2.0 * diff;
            add(k, k - 1, 2.0 * diff);
            continue;
        }

        gen(k, k) += -2.0 * diff;
        add(k, k - 1, diff);
        add(k, k + 1, diff);
        if (op.advection == AdvectionScheme::Central) {
            add(k, k + 1, bj / (2.0 * dx));
            add(k, k - 1, -bj / (2.0 * dx));
        } else if (bj >= 0.0) {
            add(k, k + 1, bj / dx);
            gen(k, k) -= bj / dx;
        } else {
            gen(k, k) += bj / dx;
            add(k, k - 1, -bj / dx);
        }
    }
    return gen;
}

} // namespace spdelab
