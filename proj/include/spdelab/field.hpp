#pragma once

#include <cstdint>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

// Values on space-time NODES: (nt+1) x (nx+1), row-major by time.
// This is the shape of a solution trajectory u(t_i, x_j).
struct FieldPath {
    Grid grid;
    std::vector<double> v; // size (nt+1)*(nx+1)
    std::uint64_t replica = 0;
    SeedSpec seed;

    FieldPath() = default;
    explicit FieldPath(const Grid& g, double fill = 0.0)
        : grid(g), v(static_cast<std::size_t>(g.nt + 1) * (g.nx + 1), fill) {}

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * (grid.nx + 1) + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * (grid.nx + 1) + j]; }
    int rows() const { return grid.nt + 1; }
    int cols() const { return grid.nx + 1; }
};

// Values on space-time CELLS: nt x nx, row-major by time. Used for noise
// increments and for Girsanov drift values X(t_i, x_j).
struct CellField {
    Grid grid;
    std::vector<double> v; // size nt*nx

    CellField() = default;
    explicit CellField(const Grid& g, double fill = 0.0)
        : grid(g), v(g.cells(), fill) {}

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * grid.nx + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * grid.nx + j]; }
};

// Sampled Girsanov drift values X(t_i, x_j) live on cells.
using DriftField = CellField;

} // namespace spdelab
