#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tdqmc/engine.hpp"
#include "tdqmc/exact_solver.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"

namespace tdqmc {

enum class Geometry { atom, molecule };

struct GridSpec {
    double x_min = -60.0;
    double x_max = 60.0;
    std::size_t n = 1024;
};

/// Every physical and numerical parameter of one experiment.
struct ExperimentConfig {
    std::string preset = "custom";
    Geometry geometry = Geometry::atom;
    double separation = 8.0;  // molecule only
    double a = 2.0;           // nuclear soft-core strength (per proton for the molecule)
    double b = 1.0;
    std::vector<double> alpha{0.6};  // one value shared by both electrons, or one per electron
    CouplingMode mode = CouplingMode::optimized;
    std::size_t m_walkers = 1000;
    GridSpec grid;
    std::size_t exact_n = 512;  // points per axis of the two-body grid
    double dt_real = 0.01;
    double d_tau = 0.02;
    double t_final = 10.0;
    std::size_t relax_steps = 500;
    double snapshot_stride = 0.1;
    std::uint64_t seed = 1;
    bool run_exact = true;
    std::string out_dir = "out";

    double initial_width = 1.0;  // density std of the starting Gaussian
    double sigma_floor = 1e-3;
    bool kernel_cutoff = false;
    WalkerMove walker_move = WalkerMove::langevin;
    double exact_d_tau = 0.02;
    double exact_tol = 1e-8;
    std::size_t exact_max_steps = 20000;
    double visibility_window = 0.5;
    /// Extra TDQMC runs in other coupling modes, compared against the main run.
    std::vector<CouplingMode> compare_modes;
    /// Non-empty: run the variational alpha scan as part of the pipeline.
    std::vector<double> scan_alphas;

    void validate() const;
};

std::string_view to_string(Geometry g) noexcept;

/// Names accepted by preset_config.
const std::vector<std::string>& preset_names();

/// Fully expanded preset; throws ConfigError for unknown names.
ExperimentConfig preset_config(std::string_view name);

/// Parses a JSON object. Keys override the named preset (if any). Unknown keys
/// raise ConfigError naming the key; without a preset, "geometry" and "b" are required.
ExperimentConfig config_from_json(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form with every field present; config_from_json(to_json(c)) == c.
std::string to_json(const ExperimentConfig& config);

NuclearFrame make_frame(const ExperimentConfig& config);
GridPtr make_grid(const ExperimentConfig& config);
GridPtr make_exact_grid(const ExperimentConfig& config);
EngineSetup make_engine_setup(const ExperimentConfig& config);
ExactGroundOptions make_exact_ground_options(const ExperimentConfig& config);

}  // namespace tdqmc
