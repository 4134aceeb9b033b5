#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "spdelab/config.hpp"
#include "spdelab/runner.hpp"

namespace {

spdelab::ExperimentConfig load_with_overrides(const std::string& config_path,
                                              const std::string& out_override,
                                              std::uint64_t seed, bool seed_set,
                                              std::size_t replicas, bool replicas_set,
                                              const std::string& mode_override) {
    spdelab::json j;
    {
        std::ifstream is(config_path);
        if (!is) throw spdelab::ConfigError("cannot open config " + config_path);
        j = spdelab::json::parse(is);
    }
    if (!out_override.empty()) j["out"] = out_override;
    if (seed_set) j["seed"] = seed;
    if (replicas_set) j["replicas"] = replicas;
    if (!mode_override.empty()) j["mode"] = mode_override;
    return spdelab::config_from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spdelab: stochastic heat equation workbench with transportation-cost checks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    bool seed_set = false, replicas_set = false;

    auto add_common = [&](CLI::App* sub, bool need_mode) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--replicas", replicas, "replica count override")
            ->each([&](const std::string&) { replicas_set = true; });
        if (need_mode)
            sub->add_option("--mode", mode, "distance mode: sup or l2")
                ->check(CLI::IsMember({"sup", "l2"}));
    };

    CLI::App* kernel = app.add_subcommand("kernel", "export the discrete heat kernel table");
    add_common(kernel, false);
    CLI::App* constants = app.add_subcommand("constants", "compute the TCI constants");
    add_common(constants, false);
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo trajectories and norms");
    add_common(simulate, false);
    CLI::App* verify = app.add_subcommand("verify-tci", "Girsanov-coupling TCI verification");
    add_common(verify, true);

    CLI::App* w2 = app.add_subcommand("w2", "Wasserstein-2 between two CSV point clouds");
    std::string cloud_a, cloud_b, w2_method = "exact", w2_out;
    double epsilon = 1e-3;
    w2->add_option("a", cloud_a, "first point cloud CSV")->required();
    w2->add_option("b", cloud_b, "second point cloud CSV")->required();
    w2->add_option("--method", w2_method, "exact or entropic")
        ->check(CLI::IsMember({"exact", "entropic"}));
    w2->add_option("--epsilon", epsilon, "entropic regularization strength");
    w2->add_option("--out", w2_out, "output directory");

    CLI::App* repr = app.add_subcommand("repr-check", "martingale representation check");
    std::string repr_case = "linear";
    std::size_t repr_replicas = 20000;
    std::uint64_t repr_seed = 2024;
    std::string repr_out;
    repr->add_option("--case", repr_case, "linear, quadratic or mixed")
        ->check(CLI::IsMember({"linear", "quadratic", "mixed"}));
    repr->add_option("--replicas", repr_replicas, "replica count");
    repr->add_option("--seed", repr_seed, "master seed");
    repr->add_option("--out", repr_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (w2->parsed()) return spdelab::run_w2(cloud_a, cloud_b, w2_method, epsilon, w2_out, std::cout);
        if (repr->parsed())
            return spdelab::run_repr_check(repr_case, repr_replicas, repr_seed, repr_out, std::cout);

        const spdelab::ExperimentConfig cfg = load_with_overrides(
            config_path, out_dir, seed, seed_set, replicas, replicas_set, mode);
        if (kernel->parsed()) return spdelab::run_kernel(cfg, std::cout);
        if (constants->parsed()) return spdelab::run_constants(cfg, std::cout);
        if (simulate->parsed()) return spdelab::run_simulate(cfg, std::cout);
        if (verify->parsed()) return spdelab::run_verify_tci(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
