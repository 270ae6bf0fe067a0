#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdqmc/analysis.hpp"
#include "tdqmc/config.hpp"
#include "tdqmc/density_matrix.hpp"
#include "tdqmc/engine.hpp"
#include "tdqmc/exact_solver.hpp"
#include "tdqmc/io.hpp"

namespace tdqmc {

/// Called with the name of each stage as it starts.
using StageHook = std::function<void(const std::string&)>;

struct TdqmcRunOptions {
    bool evolve = true;
    bool progress = true;
    bool keep_final_state = false;
    std::optional<CouplingMode> mode;  // overrides config.mode
    StageHook on_stage;
};

/// Observables of one relax -> release -> evolve run, electron 1 unless noted.
struct TdqmcRun {
    GridPtr grid;
    CouplingMode mode = CouplingMode::optimized;
    std::vector<EnergyTracePoint> energy_trace;
    EnergyEstimate ground_energy;  // tail average of the trace
    std::vector<double> times;
    std::vector<std::vector<double>> densities;     // density-matrix diagonal
    std::vector<std::vector<double>> densities_e2;  // same for electron 2
    std::vector<std::vector<double>> kde;           // walker KDE
    std::vector<double> walker_mean;
    std::vector<double> bandwidth;  // Silverman bandwidth per snapshot
    CoherenceTrace coherence;
    DensityMatrixCoord rho_ground;
    DensityMatrixCoord rho_final;
    std::vector<std::vector<double>> final_walkers;
    double max_norm_drift = 0.0;
    std::size_t clamp_events = 0;
    std::size_t walker_steps = 0;
    std::optional<EnsembleState> final_state;
};

TdqmcRun run_tdqmc(const ExperimentConfig& config, const TdqmcRunOptions& options = {});

struct ExactRunOptions {
    bool evolve = true;
    bool progress = true;
    bool strict_boundary = false;
    StageHook on_stage;
};

struct ExactRun {
    GridPtr grid;
    double ground_energy = 0.0;
    std::size_t relax_steps = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> marginals;  // electron 1
    std::vector<double> energies;
    CoherenceTrace coherence;
    DensityMatrixCoord rho_ground;
    DensityMatrixCoord rho_final;
    double max_norm_drift = 0.0;
    double max_energy_drift = 0.0;  // relative to the released energy
    double max_exchange_asymmetry = 0.0;
    double max_marginal_asymmetry = 0.0;  // max |marginal_1 - marginal_2|
    ExactEvolveReport report;
};

ExactRun run_exact(const ExperimentConfig& config, const ExactRunOptions& options = {});

struct PipelineOptions {
    bool force = false;
    bool progress = true;
};

/// Full pipeline: optional alpha scan, TDQMC relax/release/evolve, comparison
/// modes, exact solver, analysis. Always writes manifest.json last; a failed
/// stage is recorded in the manifest rather than thrown.
RunManifest run_experiment(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options = {});

/// Single-stage commands of the CLI; same manifest contract as run_experiment.
RunManifest run_ground_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options = {});
RunManifest run_evolve_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options = {});
RunManifest run_exact_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options = {});
RunManifest run_scan_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options = {});

/// Recomputes deviation.csv and visibility.csv from the density files in `dir`
/// and refreshes its manifest.
RunManifest analyze_directory(const fs::path& dir, const PipelineOptions& options = {});

/// Default alpha grid of the variational scan.
const std::vector<double>& default_scan_alphas();

}  // namespace tdqmc
