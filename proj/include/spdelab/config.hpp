#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "spdelab/drift.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/heat_kernel.hpp"
#include "spdelab/model.hpp"

namespace spdelab {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Experiment description loaded from a strict JSON file: unknown keys are
// errors, coefficient functions come from a preset registry with closed-form
// Lipschitz constants, and declared constants must dominate the preset ones.
struct ExperimentConfig {
    Grid grid;
    Boundary boundary = Boundary::Dirichlet;
    AdvectionScheme advection = AdvectionScheme::Central;

    json a_spec, b_spec, g_spec, sigma_spec, u0_spec, drift_spec;
    LipschitzData lipschitz; // declared or inferred from presets
    double drift_cap = 1e6;

    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    std::string mode = "sup"; // "sup" | "l2"
    std::string out_dir = "out";
    double alpha = 0.0; // <= 0: optimize over (1,2)
    int quad_points = 800;
    int bootstrap_resamples = 1000;
    int keep_paths = 256;
    bool plots = false;

    json canonical; // normalized config (defaults filled in)

    OperatorSpec make_operator() const;
    ModelSpec make_model() const;
    DriftSpec make_drift() const;
    KernelOptions kernel_options() const;
};

ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical dump; stable across runs.
std::string config_hash(const json& canonical);

// Closed-form Lipschitz/bound data of a coefficient preset (L, K).
struct PresetBounds {
    double lipschitz = 0.0;
    double bound = 0.0;
};
PresetBounds g_preset_bounds(const json& spec);
PresetBounds sigma_preset_bounds(const json& spec);

} // namespace spdelab
