#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdelab/grid.hpp"

namespace spdelab {

enum class Boundary { Dirichlet, Neumann, Periodic };
enum class AdvectionScheme { Central, Upwind };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

// Second-order operator (1/2) a^2(x) d^2/dx^2 + b(x) d/dx with coefficients
// sampled at the nx+1 grid nodes. a must stay away from zero.
struct OperatorSpec {
    std::vector<double> a; // size nx+1
    std::vector<double> b; // size nx+1
    Boundary boundary = Boundary::Dirichlet;
    AdvectionScheme advection = AdvectionScheme::Central;

    static OperatorSpec constant(double a_val, double b_val, Boundary bc, const Grid& grid);
    static OperatorSpec from_functions(const std::function<double(double)>& a_fn,
                                       const std::function<double(double)>& b_fn,
                                       Boundary bc, const Grid& grid);
};

// Number of interior unknowns: nx-1 (Dirichlet), nx+1 (Neumann), nx (Periodic).
int state_size(Boundary bc, int nx);
// Global node index of state entry k.
int state_node(Boundary bc, int k);
// Noise cell feeding state entry k, or -1 (Neumann right-edge node owns no cell).
int state_cell(Boundary bc, int k, int nx);

// Finite-difference generator on the state nodes. Central differences for the
// diffusion term; advection central by default, upwind (sign-aware) on request.
// Dirichlet rows drop boundary neighbors, Neumann uses mirrored ghosts,
// Periodic wraps.
Eigen::MatrixXd build_generator(const OperatorSpec& op, const Grid& grid);

} // namespace spdelab
