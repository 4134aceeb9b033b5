#include "spdelab/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace spdelab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxSlopeInvSqrt = 0.38490017945975052; // max |d/du (1+u^2)^{-1/2}| = 2/(3 sqrt 3)

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

double need_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return obj[key].get<double>();
}

double opt_number(const json& obj, const std::string& key, double fallback) {
    return obj.contains(key) ? obj[key].get<double>() : fallback;
}

std::string need_string(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string())
        throw ConfigError(where + ": missing string '" + key + "'");
    return obj[key].get<std::string>();
}

std::string preset_name(const json& spec, const std::string& where) {
    return need_string(spec, "preset", where);
}

} // namespace

PresetBounds g_preset_bounds(const json& spec) {
    const std::string name = preset_name(spec, "model.g");
    if (name == "zero") return {0.0, 0.0};
    if (name == "linear") return {std::abs(spec.value("slope", 0.0)), 0.0};
    if (name == "sin") return {std::abs(spec.value("scale", 0.0)), std::abs(spec.value("scale", 0.0))};
    throw ConfigError("model.g: unknown preset '" + name + "'");
}

PresetBounds sigma_preset_bounds(const json& spec) {
    const std::string name = preset_name(spec, "model.sigma");
    if (name == "constant") {
        const double v = std::abs(spec.value("value", 0.0));
        return {0.0, v};
    }
    if (name == "inv_sqrt") {
        const double amp = std::abs(spec.value("amplitude", 0.0));
        return {amp * kMaxSlopeInvSqrt, amp};
    }
    if (name == "cos") {
        const double amp = std::abs(spec.value("amplitude", 0.0));
        return {amp, amp};
    }
    throw ConfigError("model.sigma: unknown preset '" + name + "'");
}

namespace {

void validate_coefficient_spec(const json& spec, const std::string& where,
                               const std::set<std::string>& names) {
    const std::string name = preset_name(spec, where);
    if (!names.count(name)) throw ConfigError(where + ": unknown preset '" + name + "'");
    static const std::map<std::string, std::set<std::string>> keys = {
        {"zero", {"preset"}},
        {"constant", {"preset", "value"}},
        {"linear", {"preset", "slope"}},
        {"sin", {"preset", "scale"}},
        {"sine", {"preset", "amplitude", "mode"}},
        {"sine_bump", {"preset", "base", "amplitude"}},
        {"bump", {"preset", "amplitude", "center", "width"}},
        {"inv_sqrt", {"preset", "amplitude"}},
        {"cos", {"preset", "amplitude"}},
        {"tanh_feedback", {"preset", "gain"}},
    };
    check_keys(spec, keys.at(name), where);
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"grid", "operator", "model", "drift", "replicas", "seed", "mode", "out",
                   "alpha", "quad_points", "bootstrap_resamples", "keep_paths", "plots"},
               "config");
    ExperimentConfig cfg;

    if (!j.contains("grid")) throw ConfigError("config: missing 'grid'");
    const json& grid = j["grid"];
    check_keys(grid, {"T", "D", "nt", "nx"}, "grid");
    const double T = need_number(grid, "T", "grid");
    const double D = need_number(grid, "D", "grid");
    const int nt = static_cast<int>(need_number(grid, "nt", "grid"));
    const int nx = static_cast<int>(need_number(grid, "nx", "grid"));
    if (nt < 2) throw ConfigError("grid.nt must be >= 2");
    if (nx < 2) throw ConfigError("grid.nx must be >= 2");
    cfg.grid = make_grid(T, D, nt, nx);

    const json op = j.value("operator", json::object());
    check_keys(op, {"a", "b", "boundary", "advection"}, "operator");
    cfg.a_spec = op.value("a", json{{"preset", "constant"}, {"value", 1.0}});
    cfg.b_spec = op.value("b", json{{"preset", "constant"}, {"value", 0.0}});
    validate_coefficient_spec(cfg.a_spec, "operator.a", {"constant", "sine_bump"});
    validate_coefficient_spec(cfg.b_spec, "operator.b", {"constant", "sine"});
    cfg.boundary = boundary_from_string(op.value("boundary", std::string("dirichlet")));
    const std::string adv = op.value("advection", std::string("central"));
    if (adv == "central") cfg.advection = AdvectionScheme::Central;
    else if (adv == "upwind") cfg.advection = AdvectionScheme::Upwind;
    else throw ConfigError("operator.advection: expected 'central' or 'upwind'");
    if (cfg.a_spec["preset"] == "sine_bump") {
        const double base = need_number(cfg.a_spec, "base", "operator.a");
        const double amp = std::abs(opt_number(cfg.a_spec, "amplitude", 0.0));
        if (base - amp <= 0.0)
            throw ConfigError("operator.a: sine_bump must stay uniformly positive (base > |amplitude|)");
    }

    const json model = j.value("model", json::object());
    check_keys(model, {"g", "sigma", "u0", "lipschitz"}, "model");
    cfg.g_spec = model.value("g", json{{"preset", "zero"}});
    cfg.sigma_spec = model.value("sigma", json{{"preset", "constant"}, {"value", 1.0}});
    cfg.u0_spec = model.value("u0", json{{"preset", "zero"}});
    validate_coefficient_spec(cfg.g_spec, "model.g", {"zero", "linear", "sin"});
    validate_coefficient_spec(cfg.sigma_spec, "model.sigma", {"constant", "inv_sqrt", "cos"});
    validate_coefficient_spec(cfg.u0_spec, "model.u0", {"zero", "constant", "sine", "bump"});

    const PresetBounds gb = g_preset_bounds(cfg.g_spec);
    const PresetBounds sb = sigma_preset_bounds(cfg.sigma_spec);
    if (model.contains("lipschitz")) {
        const json& lip = model["lipschitz"];
        check_keys(lip, {"L_g", "L_sigma", "K_sigma"}, "model.lipschitz");
        cfg.lipschitz.l_g = opt_number(lip, "L_g", gb.lipschitz);
        cfg.lipschitz.l_sigma = opt_number(lip, "L_sigma", sb.lipschitz);
        cfg.lipschitz.k_sigma = opt_number(lip, "K_sigma", sb.bound);
        const double tol = 1e-12;
        if (cfg.lipschitz.l_g + tol < gb.lipschitz) {
            std::ostringstream msg;
            msg << "model.lipschitz.L_g = " << cfg.lipschitz.l_g
                << " is below the preset's Lipschitz constant " << gb.lipschitz;
            throw ConfigError(msg.str());
        }
        if (cfg.lipschitz.l_sigma + tol < sb.lipschitz) {
            std::ostringstream msg;
            msg << "model.lipschitz.L_sigma = " << cfg.lipschitz.l_sigma
                << " is below the preset's Lipschitz constant " << sb.lipschitz;
            throw ConfigError(msg.str());
        }
        if (cfg.lipschitz.k_sigma + tol < sb.bound) {
            std::ostringstream msg;
            msg << "model.lipschitz.K_sigma = " << cfg.lipschitz.k_sigma
                << " is below the preset's bound " << sb.bound;
            throw ConfigError(msg.str());
        }
    } else {
        cfg.lipschitz.l_g = gb.lipschitz;
        cfg.lipschitz.l_sigma = sb.lipschitz;
        cfg.lipschitz.k_sigma = sb.bound;
    }

    cfg.drift_spec = j.value("drift", json{{"preset", "zero"}});
    {
        json d = cfg.drift_spec;
        cfg.drift_cap = d.value("cap", 1e6);
        d.erase("cap");
        validate_coefficient_spec(d, "drift", {"zero", "constant", "sine", "tanh_feedback"});
    }

    if (j.contains("replicas")) {
        const double r = need_number(j, "replicas", "config");
        if (r < 1) throw ConfigError("config.replicas must be >= 1");
        cfg.replicas = static_cast<std::size_t>(r);
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.mode = j.value("mode", std::string("sup"));
    if (cfg.mode != "sup" && cfg.mode != "l2")
        throw ConfigError("config.mode: expected 'sup' or 'l2'");
    cfg.out_dir = j.value("out", std::string("out"));
    if (j.contains("alpha")) {
        if (j["alpha"].is_string()) {
            if (j["alpha"] != "optimize") throw ConfigError("config.alpha: number or 'optimize'");
            cfg.alpha = 0.0;
        } else {
            cfg.alpha = j["alpha"].get<double>();
            if (!(cfg.alpha > 1.0 && cfg.alpha < 2.0))
                throw ConfigError("config.alpha must lie in (1,2)");
        }
    }
    cfg.quad_points = static_cast<int>(opt_number(j, "quad_points", 800));
    cfg.bootstrap_resamples = static_cast<int>(opt_number(j, "bootstrap_resamples", 1000));
    cfg.keep_paths = static_cast<int>(opt_number(j, "keep_paths", 256));
    cfg.plots = j.value("plots", false);

    // canonical form with defaults filled in (std::map ordering makes the dump stable)
    json canon = j;
    canon["grid"] = {{"T", T}, {"D", D}, {"nt", nt}, {"nx", nx}};
    canon["operator"] = {{"a", cfg.a_spec}, {"b", cfg.b_spec},
                         {"boundary", to_string(cfg.boundary)}, {"advection", adv}};
    canon["model"] = {{"g", cfg.g_spec}, {"sigma", cfg.sigma_spec}, {"u0", cfg.u0_spec},
                      {"lipschitz", {{"L_g", cfg.lipschitz.l_g}, {"L_sigma", cfg.lipschitz.l_sigma},
                                     {"K_sigma", cfg.lipschitz.k_sigma}}}};
    canon["drift"] = cfg.drift_spec;
    canon["replicas"] = cfg.replicas;
    canon["seed"] = cfg.seed;
    canon["mode"] = cfg.mode;
    canon["out"] = cfg.out_dir;
    canon["alpha"] = cfg.alpha;
    canon["quad_points"] = cfg.quad_points;
    canon["bootstrap_resamples"] = cfg.bootstrap_resamples;
    canon["keep_paths"] = cfg.keep_paths;
    canon["plots"] = cfg.plots;
    cfg.canonical = std::move(canon);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("load_config: cannot open " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("load_config: ") + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const json& canonical) {
    const std::string dump = canonical.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

OperatorSpec ExperimentConfig::make_operator() const {
    const double d_len = grid.length;
    auto coeff = [d_len](const json& spec) -> std::function<double(double)> {
        const std::string name = spec["preset"].get<std::string>();
        if (name == "constant") {
            const double v = spec.value("value", 0.0);
            return [v](double) { return v; };
        }
        if (name == "sine_bump") {
            const double base = spec.value("base", 1.0);
            const double amp = spec.value("amplitude", 0.0);
            return [base, amp, d_len](double x) {
                return base + amp * std::sin(kPi * x / d_len);
            };
        }
        if (name == "sine") {
            const double amp = spec.value("amplitude", 0.0);
            return [amp, d_len](double x) { return amp * std::sin(2.0 * kPi * x / d_len); };
        }
        throw ConfigError("operator: unknown coefficient preset");
    };
    OperatorSpec op = OperatorSpec::from_functions(coeff(a_spec), coeff(b_spec), boundary, grid);
    op.advection = advection;
    return op;
}

ModelSpec ExperimentConfig::make_model() const {
    ModelSpec m;
    m.op = make_operator();
    m.lipschitz = lipschitz;

    {
        const std::string name = g_spec["preset"].get<std::string>();
        if (name == "zero") {
            m.g = [](double, double, double) { return 0.0; };
        } else if (name == "linear") {
            const double slope = g_spec.value("slope", 0.0);
            m.g = [slope](double, double, double u) { return slope * u; };
        } else { // sin
            const double scale = g_spec.value("scale", 0.0);
            m.g = [scale](double, double, double u) { return scale * std::sin(u); };
        }
    }
    {
        const std::string name = sigma_spec["preset"].get<std::string>();
        if (name == "constant") {
            const double v = sigma_spec.value("value", 0.0);
            m.sigma = [v](double, double, double) { return v; };
        } else if (name == "inv_sqrt") {
            const double amp = sigma_spec.value("amplitude", 0.0);
            m.sigma = [amp](double, double, double u) { return amp / std::sqrt(1.0 + u * u); };
        } else { // cos
            const double amp = sigma_spec.value("amplitude", 0.0);
            m.sigma = [amp](double, double, double u) { return amp * std::cos(u); };
        }
    }
    {
        const std::string name = u0_spec["preset"].get<std::string>();
        const double d_len = grid.length;
        if (name == "zero") {
            m.u0 = [](double) { return 0.0; };
        } else if (name == "constant") {
            const double v = u0_spec.value("value", 0.0);
            m.u0 = [v](double) { return v; };
        } else if (name == "sine") {
            const double amp = u0_spec.value("amplitude", 1.0);
            const double mode = u0_spec.value("mode", 1.0);
            m.u0 = [amp, mode, d_len](double x) { return amp * std::sin(mode * kPi * x / d_len); };
        } else { // bump
            const double amp = u0_spec.value("amplitude", 1.0);
            const double center = u0_spec.value("center", 0.5 * d_len);
            const double width = u0_spec.value("width", 0.1 * d_len);
            m.u0 = [amp, center, width](double x) {
                const double z = (x - center) / width;
                return amp * std::exp(-z * z);
            };
        }
    }
    return m;
}

DriftSpec ExperimentConfig::make_drift() const {
    const std::string name = drift_spec["preset"].get<std::string>();
    if (name == "zero") return DriftSpec::zero();
    if (name == "constant") return DriftSpec::constant(drift_spec.value("value", 0.0), drift_cap);
    if (name == "sine") {
        const double amp = drift_spec.value("amplitude", 0.0);
        const double d_len = grid.length;
        return DriftSpec::deterministic(
            [amp, d_len](double, double x) { return amp * std::sin(kPi * x / d_len); }, drift_cap);
    }
    // tanh_feedback: reads the current slice of the trajectory
    const double gain = drift_spec.value("gain", 0.0);
    return DriftSpec::state_feedback(
        [gain](double, double, const PastView& past, int j_cell) {
            return gain * std::tanh(past.current(j_cell));
        },
        drift_cap);
}

KernelOptions ExperimentConfig::kernel_options() const {
    KernelOptions opt;
    opt.quad_points = quad_points;
    return opt;
}

} // namespace spdelab
