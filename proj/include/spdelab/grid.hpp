#pragma once

#include <cstddef>

#include "spdelab/errors.hpp"

namespace spdelab {

// Uniform space-time discretization of [0,T] x [0,D].
// Time node i sits at t_i = i*dt (i = 0..nt); space node j at x_j = j*dx
// (j = 0..nx). Cell (i,j) is [t_i, t_{i+1}) x [x_j, x_{j+1}), i < nt, j < nx.
struct Grid {
    double horizon = 0.0; // T
    double length = 0.0;  // D
    int nt = 0;
    int nx = 0;
    double dt = 0.0;
    double dx = 0.0;

    double time(int i) const { return static_cast<double>(i) * dt; }
    double space(int j) const { return static_cast<double>(j) * dx; }
    std::size_t cells() const { return static_cast<std::size_t>(nt) * static_cast<std::size_t>(nx); }
    double cell_measure() const { return dt * dx; }
};

inline Grid make_grid(double T, double D, int nt, int nx) {
    if (!(T > 0.0) || !(D > 0.0))
        throw ConfigError("make_grid: T and D must be positive");
    if (nt < 2 || nx < 2)
        throw ConfigError("make_grid: nt and nx must be >= 2");
    Grid g;
    g.horizon = T;
    g.length = D;
    g.nt = nt;
    g.nx = nx;
    g.dt = T / static_cast<double>(nt);
    g.dx = D / static_cast<double>(nx);
    return g;
}

inline bool same_grid(const Grid& a, const Grid& b) {
    return a.nt == b.nt && a.nx == b.nx && a.horizon == b.horizon && a.length == b.length;
}

} // namespace spdelab
