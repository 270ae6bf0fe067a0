#include "tdqmc/config.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tdqmc/error.hpp"

namespace tdqmc {
namespace {

using json = nlohmann::json;

Geometry parse_geometry(std::string_view s) {
    if (s == "atom") return Geometry::atom;
    if (s == "molecule") return Geometry::molecule;
    throw ConfigError("unknown geometry '" + std::string(s) + "' (expected atom | molecule)");
}

double default_strength(Geometry g) { return g == Geometry::atom ? 2.0 : 1.0; }
double default_width(Geometry g) { return g == Geometry::atom ? 1.0 : 3.0; }

ExperimentConfig base(std::string name, Geometry g, double b) {
    ExperimentConfig c;
    c.preset = std::move(name);
    c.geometry = g;
    c.a = default_strength(g);
    c.initial_width = default_width(g);
    c.b = b;
    // the two-well ground state relaxes slowly: walkers must settle on opposite protons
    if (g == Geometry::molecule) {
        c.exact_d_tau = 0.1;
        c.d_tau = 0.05;
        c.relax_steps = 1000;
    }
    return c;
}

const std::map<std::string, std::function<ExperimentConfig()>, std::less<>>& preset_table() {
    static const std::map<std::string, std::function<ExperimentConfig()>, std::less<>> table{
        {"fig1-atom", [] { return base("fig1-atom", Geometry::atom, 1.0); }},
        {"fig1-molecule", [] { return base("fig1-molecule", Geometry::molecule, 1.0); }},
        {"fig2-atom-single-slit", [] { return base("fig2-atom-single-slit", Geometry::atom, 1.0); }},
        {"fig2c-ultra",
         [] {
             auto c = base("fig2c-ultra", Geometry::atom, 1.0);
             c.mode = CouplingMode::ultra_correlated;
             return c;
         }},
        {"fig3-molecule", [] { return base("fig3-molecule", Geometry::molecule, 0.02); }},
        {"fig4-dm", [] { return base("fig4-dm", Geometry::atom, 1.0); }},
        {"fig5-coherence",
         [] {
             auto c = base("fig5-coherence", Geometry::atom, 1.0);
             c.compare_modes = {CouplingMode::ultra_correlated, CouplingMode::mean_field};
             return c;
         }},
        {"alpha-scan",
         [] {
             auto c = base("alpha-scan", Geometry::atom, 1.0);
             c.scan_alphas = {0.2, 0.4, 0.6, 0.8, 1.0, 1.4};
             return c;
         }},
    };
    return table;
}

template <class T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

std::vector<double> get_alpha(const json& v) {
    if (v.is_number()) return {get_as<double>(v, "alpha")};
    return get_as<std::vector<double>>(v, "alpha");
}

void apply_grid(const json& v, GridSpec& g) {
    if (!v.is_object()) throw ConfigError("config key 'grid' must be an object {x_min, x_max, n}");
    for (const auto& [key, val] : v.items()) {
        if (key == "x_min") g.x_min = get_as<double>(val, "grid.x_min");
        else if (key == "x_max") g.x_max = get_as<double>(val, "grid.x_max");
        else if (key == "n") g.n = get_as<std::size_t>(val, "grid.n");
        else throw ConfigError("unknown config key 'grid." + key + "'");
    }
}

WalkerMove parse_walker_move(const std::string& s) {
    if (s == "langevin") return WalkerMove::langevin;
    if (s == "redraw") return WalkerMove::redraw;
    throw ConfigError("config key 'walker_move': expected 'langevin' or 'redraw', got '" + s + "'");
}

void apply(ExperimentConfig& c, const std::string& key, const json& v) {
    if (key == "geometry") c.geometry = parse_geometry(get_as<std::string>(v, key));
    else if (key == "separation") c.separation = get_as<double>(v, key);
    else if (key == "a") c.a = get_as<double>(v, key);
    else if (key == "b") c.b = get_as<double>(v, key);
    else if (key == "alpha") c.alpha = get_alpha(v);
    else if (key == "mode") c.mode = parse_coupling_mode(get_as<std::string>(v, key));
    else if (key == "m_walkers") c.m_walkers = get_as<std::size_t>(v, key);
    else if (key == "grid") apply_grid(v, c.grid);
    else if (key == "exact_n") c.exact_n = get_as<std::size_t>(v, key);
    else if (key == "dt_real") c.dt_real = get_as<double>(v, key);
    else if (key == "d_tau") c.d_tau = get_as<double>(v, key);
    else if (key == "t_final") c.t_final = get_as<double>(v, key);
    else if (key == "relax_steps") c.relax_steps = get_as<std::size_t>(v, key);
    else if (key == "snapshot_stride") c.snapshot_stride = get_as<double>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "run_exact") c.run_exact = get_as<bool>(v, key);
    else if (key == "out_dir") c.out_dir = get_as<std::string>(v, key);
    else if (key == "initial_width") c.initial_width = get_as<double>(v, key);
    else if (key == "sigma_floor") c.sigma_floor = get_as<double>(v, key);
    else if (key == "kernel_cutoff") c.kernel_cutoff = get_as<bool>(v, key);
    else if (key == "walker_move") c.walker_move = parse_walker_move(get_as<std::string>(v, key));
    else if (key == "exact_d_tau") c.exact_d_tau = get_as<double>(v, key);
    else if (key == "exact_tol") c.exact_tol = get_as<double>(v, key);
    else if (key == "exact_max_steps") c.exact_max_steps = get_as<std::size_t>(v, key);
    else if (key == "visibility_window") c.visibility_window = get_as<double>(v, key);
    else if (key == "compare_modes") {
        c.compare_modes.clear();
        for (const auto& m : get_as<std::vector<std::string>>(v, key)) c.compare_modes.push_back(parse_coupling_mode(m));
    } else if (key == "scan_alphas") c.scan_alphas = get_as<std::vector<double>>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string_view to_string(Geometry g) noexcept { return g == Geometry::atom ? "atom" : "molecule"; }

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, _] : preset_table()) out.push_back(name);
        return out;
    }();
    return names;
}

ExperimentConfig preset_config(std::string_view name) {
    const auto& table = preset_table();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown preset '" + std::string(name) + "'");
    auto c = it->second();
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(std::string("config: '") + key + "' must be positive");
    };
    if (!(grid.x_max > grid.x_min)) throw ConfigError("config: grid.x_max must exceed grid.x_min");
    if (grid.n < 16 || !is_pow2(grid.n)) throw ConfigError("config: grid.n must be a power of two >= 16");
    if (run_exact && (exact_n < 16 || !is_pow2(exact_n))) {
        throw ConfigError("config: exact_n must be a power of two >= 16");
    }
    if (!(b >= 0.0)) throw ConfigError("config: 'b' must be >= 0");
    if (!(a >= 0.0)) throw ConfigError("config: 'a' must be >= 0");
    if (geometry == Geometry::molecule) positive(separation, "separation");
    if (alpha.empty() || alpha.size() > 2) throw ConfigError("config: 'alpha' needs one or two entries");
    for (double v : alpha) positive(v, "alpha");
    if (m_walkers < 1) throw ConfigError("config: 'm_walkers' must be positive");
    positive(dt_real, "dt_real");
    positive(d_tau, "d_tau");
    if (!(t_final >= 0.0)) throw ConfigError("config: 't_final' must be >= 0");
    positive(snapshot_stride, "snapshot_stride");
    positive(initial_width, "initial_width");
    positive(sigma_floor, "sigma_floor");
    positive(exact_d_tau, "exact_d_tau");
    positive(exact_tol, "exact_tol");
    if (!(visibility_window > 0.0 && visibility_window <= 1.0)) {
        throw ConfigError("config: 'visibility_window' must lie in (0, 1]");
    }
    for (double v : scan_alphas) positive(v, "scan_alphas");
}

ExperimentConfig config_from_json(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");

    ExperimentConfig c;
    const bool has_preset = doc.contains("preset") && get_as<std::string>(doc["preset"], "preset") != "custom";
    if (has_preset) {
        c = preset_config(get_as<std::string>(doc["preset"], "preset"));
    } else {
        for (const char* required : {"geometry", "b"}) {
            if (!doc.contains(required)) {
                throw ConfigError(std::string("config: missing required key '") + required + "' (no preset given)");
            }
        }
    }
    for (const auto& [key, val] : doc.items()) {
        if (key == "preset") continue;
        apply(c, key, val);
    }
    // geometry-dependent defaults follow an explicit geometry unless also given
    if (doc.contains("geometry")) {
        if (!doc.contains("a")) c.a = default_strength(c.geometry);
        if (!doc.contains("initial_width")) c.initial_width = default_width(c.geometry);
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
    json j;
    j["preset"] = c.preset;
    j["geometry"] = std::string(to_string(c.geometry));
    j["separation"] = c.separation;
    j["a"] = c.a;
    j["b"] = c.b;
    j["alpha"] = c.alpha;
    j["mode"] = std::string(to_string(c.mode));
    j["m_walkers"] = c.m_walkers;
    j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"n", c.grid.n}};
    j["exact_n"] = c.exact_n;
    j["dt_real"] = c.dt_real;
    j["d_tau"] = c.d_tau;
    j["t_final"] = c.t_final;
    j["relax_steps"] = c.relax_steps;
    j["snapshot_stride"] = c.snapshot_stride;
    j["seed"] = c.seed;
    j["run_exact"] = c.run_exact;
    j["out_dir"] = c.out_dir;
    j["initial_width"] = c.initial_width;
    j["sigma_floor"] = c.sigma_floor;
    j["kernel_cutoff"] = c.kernel_cutoff;
    j["walker_move"] = c.walker_move == WalkerMove::langevin ? "langevin" : "redraw";
    j["exact_d_tau"] = c.exact_d_tau;
    j["exact_tol"] = c.exact_tol;
    j["exact_max_steps"] = c.exact_max_steps;
    j["visibility_window"] = c.visibility_window;
    std::vector<std::string> modes;
    for (auto m : c.compare_modes) modes.emplace_back(to_string(m));
    j["compare_modes"] = modes;
    j["scan_alphas"] = c.scan_alphas;
    return j.dump(2);
}

NuclearFrame make_frame(const ExperimentConfig& c) {
    return c.geometry == Geometry::atom ? NuclearFrame::atom(c.a) : NuclearFrame::molecule(c.separation, c.a);
}

GridPtr make_grid(const ExperimentConfig& c) { return make_grid(c.grid.x_min, c.grid.x_max, c.grid.n); }

GridPtr make_exact_grid(const ExperimentConfig& c) { return make_grid(c.grid.x_min, c.grid.x_max, c.exact_n); }

EngineSetup make_engine_setup(const ExperimentConfig& c) {
    EngineSetup s;
    s.grid = make_grid(c);
    s.frame = make_frame(c);
    s.coupling.b = c.b;
    s.coupling.alpha = c.alpha;
    s.coupling.mode = c.mode;
    s.coupling.sigma_floor = c.sigma_floor;
    s.m_walkers = c.m_walkers;
    s.seed = c.seed;
    s.initial_width = c.initial_width;
    return s;
}

ExactGroundOptions make_exact_ground_options(const ExperimentConfig& c) {
    ExactGroundOptions o;
    o.d_tau = c.exact_d_tau;
    o.tol = c.exact_tol;
    o.max_steps = c.exact_max_steps;
    o.initial_sigma = c.initial_width;
    return o;
}

}  // namespace tdqmc
