#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spdelab/field.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

// Discretized space-time white noise: one increment per cell,
// dW[i][j] ~ N(0, dt*dx), mutually independent, addressable by counter so the
// sheet can be regenerated lazily instead of materialized.
class NoiseSheet {
public:
    NoiseSheet() = default;

    // Materialized sheet (default).
    static NoiseSheet sample(const Grid& grid, SeedSpec seed);
    // Regenerate-from-counter mode: no storage, values recomputed on access.
    static NoiseSheet lazy(const Grid& grid, SeedSpec seed);
    // Wrap explicit increments (tilted sheets, test fixtures).
    static NoiseSheet from_values(const Grid& grid, std::vector<double> dw, SeedSpec seed = {});

    double at(int i, int j) const {
        if (!values_.empty()) return values_[static_cast<std::size_t>(i) * grid_.nx + j];
        return generate(i, j);
    }
    // Copies row i (all nx cell increments) into out.
    void row(int i, double* out) const;

    const Grid& grid() const { return grid_; }
    SeedSpec seed() const { return seed_; }
    bool materialized() const { return !values_.empty(); }
    const std::vector<double>& values() const { return values_; }

private:
    double generate(int i, int j) const;

    Grid grid_;
    SeedSpec seed_;
    CounterRng rng_{SeedSpec{}};
    double scale_ = 0.0; // sqrt(dt*dx)
    std::vector<double> values_; // empty in lazy mode
};

NoiseSheet sample_white_noise(const Grid& grid, SeedSpec seed);

// Cumulative sheet W(t_i, x_j) = sum of increments over [0,t_i) x [0,x_j);
// zero on the axes. Returned on nodes.
FieldPath brownian_sheet(const NoiseSheet& noise);

// Girsanov tilt at grid scale: dW~[i][j] = dW[i][j] - X[i][j]*dt*dx.
// Non-finite drift values are an error carrying the cell index.
NoiseSheet tilt_noise(const NoiseSheet& noise, const DriftField& drift);

// Binary dump for cross-language golden tests. Little-endian layout:
//   u64 magic 'SPDLNOIS', i64 nt, i64 nx, f64 T, f64 D, u64 master seed,
//   u64 replica, then nt*nx f64 increments row-major by time.
void write_noise(const NoiseSheet& noise, std::ostream& os);
void write_noise_file(const NoiseSheet& noise, const std::string& path);
NoiseSheet read_noise(std::istream& is);
NoiseSheet read_noise_file(const std::string& path);

} // namespace spdelab
