#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"
#include "tdqmc/rng.hpp"
#include "tdqmc/wave_ensemble.hpp"

namespace tdqmc {

/// Everything needed to build an initial ensemble.
struct EngineSetup {
    GridPtr grid;
    NuclearFrame frame = NuclearFrame::atom();
    CouplingParams coupling;
    std::size_t n_electrons = 2;
    std::size_t m_walkers = 1000;
    std::uint64_t seed = 1;
    double initial_center = 0.0;
    double initial_width = 1.0;  // density standard deviation of the starting Gaussian
    /// Replaces the nuclear potential (used for model problems such as harmonic wells).
    std::optional<PotentialGrid> one_body_override;

    void validate() const;
};

struct EngineStats {
    std::size_t clamp_events = 0;
    std::size_t walker_steps = 0;
    double max_norm_drift = 0.0;  // max | ||phi|| - 1 | seen at step boundaries
    bool clamp_warning = false;
};

struct EnsembleState {
    GridPtr grid;
    std::size_t n_electrons = 0;
    std::size_t m_walkers = 0;
    std::vector<WaveEnsemble> waves;           // per electron
    std::vector<std::vector<double>> walkers;  // per electron, M positions
    std::vector<double> sigmas;                // per electron
    double time = 0.0;
    std::uint64_t rng_seed = 0;
    std::uint64_t epoch = 0;  // advances once per step; addresses the random streams
    CouplingParams coupling;
    NuclearFrame frame;
    PotentialGrid one_body;  // v_en on the grid, or the override
    EngineStats stats;

    /// Mean of the guide-wave densities of one electron (density-matrix diagonal).
    std::vector<double> density(std::size_t electron) const { return waves[electron].mean_density(); }
    double alpha(std::size_t electron) const;
};

EnsembleState init_ensemble(const EngineSetup& setup);

/// One Metropolis-adjusted Langevin move from x: drift d/dx ln|phi|, diffusion
/// constant 1/2, accept/reject against the cubic interpolant of phi, so |phi|^2
/// is invariant. A walker sitting where the wave vanished is redrawn from |phi|^2.
double langevin_move(std::span<const Complex> psi, const Grid1D& grid, double x, double d_tau, RandomStream& rng);

/// How walkers follow their guide waves in imaginary time.
enum class WalkerMove {
    langevin,  // Metropolis-adjusted drift-diffusion step, walkers keep their history
    redraw,    // fresh independent draw from |phi|^2 every step
};

struct EngineOptions {
    EffectivePotentialOptions potential;
    WalkerMove imaginary_walkers = WalkerMove::langevin;
    /// Visit walkers in reverse index order; results must not depend on it.
    bool reverse_order = false;
    /// Progress line on stderr every 100 steps.
    bool progress = true;
    std::size_t energy_every = 10;
    double clamp_warning_fraction = 0.01;
};

struct EnergyEstimate {
    double total = 0.0;
    double kinetic_plus_en = 0.0;
    double ee = 0.0;
    double std_error = 0.0;
};

/// sum_i mean_k <phi_i^k| T + V_one |phi_i^k> + mean_k sum_{i<j} v_ee(x_i^k - x_j^k),
/// with the standard error taken over walker index k.
EnergyEstimate estimate_energy(const EnsembleState& state);

struct EnergyTracePoint {
    std::size_t step = 0;
    double tau = 0.0;
    EnergyEstimate energy;
};

/// Mean of the total energy over the trailing `fraction` of the trace; the
/// error is the standard error of those samples.
EnergyEstimate tail_average(std::span<const EnergyTracePoint> trace, double fraction = 0.2);

/// Least-squares slope of the total energy per step over the trailing fraction.
double tail_slope(std::span<const EnergyTracePoint> trace, double fraction = 0.2);

/// Imaginary-time relaxation with exact walker redraw and per-step sigma update.
/// Appends an energy point every `energy_every` steps (and at the last step).
std::vector<EnergyTracePoint> relax_ground_state(EnsembleState& state, std::size_t n_steps, double d_tau,
                                                 const EngineOptions& options = {});

struct AlphaPoint {
    double alpha = 0.0;
    EnergyEstimate energy;
};

/// Relaxes a fresh ensemble per alpha (shared by all electrons) and reports the
/// tail-averaged energy.
std::vector<AlphaPoint> scan_alpha(const EngineSetup& setup, std::span<const double> alphas,
                                   std::size_t relax_steps, double d_tau, const EngineOptions& options = {});

/// Switches the nuclear attraction off and resets the clock. Throws StateError if already released.
void release(EnsembleState& state);

using SnapshotSink = std::function<void(const EnsembleState&)>;

/// Coupled real-time propagation of all guide waves with Bohmian walker
/// advection. The sink sees t = 0 and every snapshot_stride.
void evolve_real_time(EnsembleState& state, double t_final, double dt, double snapshot_stride,
                      const SnapshotSink& sink, const EngineOptions& options = {});

/// Copy of the observable part of a state for storing time series.
struct EnsembleSnapshot {
    double time = 0.0;
    std::vector<std::vector<double>> walkers;
    std::vector<double> sigmas;
    std::vector<std::vector<double>> densities;
    std::vector<WaveEnsemble> waves;  // empty unless requested
};

EnsembleSnapshot make_snapshot(const EnsembleState& state, bool include_waves = false);

}  // namespace tdqmc
