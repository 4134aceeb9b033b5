#include "spdelab/noise.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

std::uint64_t to_le(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::little) return x;
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r |= ((x >> (8 * k)) & 0xffULL) << (8 * (7 - k));
    return r;
}

void put_u64(std::ostream& os, std::uint64_t x) {
    const std::uint64_t le = to_le(x);
    os.write(reinterpret_cast<const char*>(&le), 8);
}

void put_f64(std::ostream& os, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(os, bits);
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t le = 0;
    is.read(reinterpret_cast<char*>(&le), 8);
    return to_le(le);
}

double get_f64(std::istream& is) {
    const std::uint64_t bits = get_u64(is);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

} // namespace

// 'SPDLNOIS' as little-endian u64.
static constexpr std::uint64_t kMagic = 0x53494f4e4c445053ULL;

NoiseSheet NoiseSheet::sample(const Grid& grid, SeedSpec seed) {
    NoiseSheet s = lazy(grid, seed);
    std::vector<double> vals(grid.cells());
    for (int i = 0; i < grid.nt; ++i)
        for (int j = 0; j < grid.nx; ++j)
            vals[static_cast<std::size_t>(i) * grid.nx + j] = s.generate(i, j);
    s.values_ = std::move(vals);
    return s;
}

NoiseSheet NoiseSheet::lazy(const Grid& grid, SeedSpec seed) {
    NoiseSheet s;
    s.grid_ = grid;
    s.seed_ = seed;
    s.rng_ = CounterRng(seed);
    s.scale_ = std::sqrt(grid.dt * grid.dx);
    return s;
}

NoiseSheet NoiseSheet::from_values(const Grid& grid, std::vector<double> dw, SeedSpec seed) {
    if (dw.size() != grid.cells())
        throw ConfigError("NoiseSheet::from_values: size mismatch with grid");
    NoiseSheet s = lazy(grid, seed);
    s.values_ = std::move(dw);
    return s;
}

double NoiseSheet::generate(int i, int j) const {
    const std::uint64_t counter = static_cast<std::uint64_t>(i) * grid_.nx + j;
    return rng_.normal(counter) * scale_;
}

void NoiseSheet::row(int i, double* out) const {
    if (!values_.empty()) {
        std::memcpy(out, values_.data() + static_cast<std::size_t>(i) * grid_.nx,
                    sizeof(double) * grid_.nx);
        return;
    }
    for (int j = 0; j < grid_.nx; ++j) out[j] = generate(i, j);
}

NoiseSheet sample_white_noise(const Grid& grid, SeedSpec seed) {
    return NoiseSheet::sample(grid, seed);
}

FieldPath brownian_sheet(const NoiseSheet& noise) {
    const Grid& g = noise.grid();
    FieldPath w(g, 0.0);
    // W(t_{i+1}, x_{j+1}) = W(t_i, x_{j+1}) + W(t_{i+1}, x_j) - W(t_i, x_j) + dW[i][j]
    for (int i = 0; i < g.nt; ++i) {
        for (int j = 0; j < g.nx; ++j) {
            w.at(i + 1, j + 1) = w.at(i, j + 1) + w.at(i + 1, j) - w.at(i, j) + noise.at(i, j);
        }
    }
    return w;
}

NoiseSheet tilt_noise(const NoiseSheet& noise, const DriftField& drift) {
    const Grid& g = noise.grid();
    if (!same_grid(g, drift.grid))
        throw ConfigError("tilt_noise: drift grid does not match noise grid");
    std::vector<double> out(g.cells());
    const double dm = g.cell_measure();
    for (int i = 0; i < g.nt; ++i) {
        for (int j = 0; j < g.nx; ++j) {
            const double x = drift.at(i, j);
            if (!std::isfinite(x)) {
                std::ostringstream msg;
                msg << "tilt_noise: non-finite drift at cell (" << i << ", " << j << ")";
                throw NumericError(msg.str());
            }
            out[static_cast<std::size_t>(i) * g.nx + j] = noise.at(i, j) - x * dm;
        }
    }
    return NoiseSheet::from_values(g, std::move(out), noise.seed());
}

void write_noise(const NoiseSheet& noise, std::ostream& os) {
    const Grid& g = noise.grid();
    put_u64(os, kMagic);
    put_u64(os, static_cast<std::uint64_t>(g.nt));
    put_u64(os, static_cast<std::uint64_t>(g.nx));
    put_f64(os, g.horizon);
    put_f64(os, g.length);
    put_u64(os, noise.seed().master);
    put_u64(os, noise.seed().replica);
    std::vector<double> row(g.nx);
    for (int i = 0; i < g.nt; ++i) {
        noise.row(i, row.data());
        for (int j = 0; j < g.nx; ++j) put_f64(os, row[j]);
    }
}

void write_noise_file(const NoiseSheet& noise, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("write_noise_file: cannot open " + path);
    write_noise(noise, os);
}

NoiseSheet read_noise(std::istream& is) {
    if (get_u64(is) != kMagic) throw ConfigError("read_noise: bad magic");
    const auto nt = static_cast<int>(get_u64(is));
    const auto nx = static_cast<int>(get_u64(is));
    const double T = get_f64(is);
    const double D = get_f64(is);
    SeedSpec seed;
    seed.master = get_u64(is);
    seed.replica = get_u64(is);
    const Grid g = make_grid(T, D, nt, nx);
    std::vector<double> dw(g.cells());
    for (auto& x : dw) x = get_f64(is);
    if (!is) throw ConfigError("read_noise: truncated stream");
    return NoiseSheet::from_values(g, std::move(dw), seed);
}

NoiseSheet read_noise_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("read_noise_file: cannot open " + path);
    return read_noise(is);
}

} // namespace spdelab
