#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tdqmc/density_matrix.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/potentials.hpp"

namespace tdqmc {

/// Two-electron wavefunction Psi(x1, x2) on the tensor grid, row-major with
/// psi[i1 * n + i2] = Psi(x_i1, x_i2).
struct ExactState2D {
    GridPtr grid;
    std::vector<Complex> psi;
    double time = 0.0;

    ExactState2D() = default;
    explicit ExactState2D(GridPtr g) : grid(std::move(g)), psi(grid->size() * grid->size()) {}

    std::size_t size() const noexcept { return grid->size(); }
    Complex at(std::size_t i1, std::size_t i2) const noexcept { return psi[i1 * size() + i2]; }
    Complex& at(std::size_t i1, std::size_t i2) noexcept { return psi[i1 * size() + i2]; }

    double norm_squared() const;
    void normalize();
    /// max |Psi(x1, x2) - Psi(x2, x1)|
    double exchange_asymmetry() const;
};

ExactState2D product_state(const Wavefunction1D& first, const Wavefunction1D& second);

/// H = T1 + T2 + U(x1) + U(x2) + b / sqrt(1 + (x1 - x2)^2)
struct TwoBodyHamiltonian {
    PotentialGrid one_body;
    double b = 0.0;

    static TwoBodyHamiltonian from_frame(const GridPtr& grid, const NuclearFrame& frame, double b);
    const GridPtr& grid() const noexcept { return one_body.grid; }
    double potential(std::size_t i1, std::size_t i2) const;
};

double exact_energy(const ExactState2D& state, const TwoBodyHamiltonian& h);

/// 2D Strang split-operator step with precomputed half-potential and kinetic factors.
class ExactPropagator {
public:
    ExactPropagator(TwoBodyHamiltonian h, double dt, TimeMode mode);

    void step(ExactState2D& state) const;
    const TwoBodyHamiltonian& hamiltonian() const noexcept { return h_; }
    double dt() const noexcept { return dt_; }

private:
    TwoBodyHamiltonian h_;
    double dt_;
    TimeMode mode_;
    std::vector<Complex> half_potential_;
    std::vector<Complex> kinetic_;
};

struct ExactGroundOptions {
    double d_tau = 0.02;
    double tol = 1e-8;  // hartree per step
    std::size_t max_steps = 20000;
    std::size_t check_every = 10;
    double initial_sigma = 1.0;  // density width of the symmetric starting blob
};

struct ExactGroundState {
    ExactState2D state;
    double energy = 0.0;
    std::size_t steps = 0;
};

/// Imaginary-time relaxation from a symmetric Gaussian until the energy
/// changes by less than tol per step. Throws ConvergenceError at max_steps.
ExactGroundState exact_ground_state(const TwoBodyHamiltonian& h, const ExactGroundOptions& options = {});
ExactGroundState exact_ground_state(const NuclearFrame& frame, double b, const GridPtr& grid,
                                    const ExactGroundOptions& options = {});

struct ExactEvolveOptions {
    double dt = 0.01;
    double snapshot_stride = 0.1;
    double boundary_limit = 1e-6;
    bool strict_boundary = false;  // escalate the boundary warning to BoundaryError
};

struct ExactEvolveReport {
    std::size_t steps = 0;
    double max_boundary_density = 0.0;
    bool boundary_warning = false;
};

using ExactObserver = std::function<void(const ExactState2D&)>;

/// Real-time evolution in place; the observer sees t = 0 and every snapshot_stride.
ExactEvolveReport exact_evolve(ExactState2D& state, double t_final, const TwoBodyHamiltonian& h,
                               const ExactEvolveOptions& options, const ExactObserver& observer);

/// Convenience form that stores every snapshot.
std::vector<ExactState2D> exact_evolve(ExactState2D initial, double t_final, const TwoBodyHamiltonian& h,
                                       const ExactEvolveOptions& options = {});

/// Reduced one-electron density matrix of electron 1 (partner integrated
/// out), scaled to unit trace. Same index orientation as DensityMatrixCoord.
DensityMatrixCoord reduced_density_matrix(const ExactState2D& state);

/// Marginal density of electron 1 or 2, integrating to 1.
std::vector<double> marginal_density(const ExactState2D& state, int electron);

/// Bohmian configuration-space velocity field Im[grad_i Psi / Psi] on grid nodes.
struct VelocityField2D {
    GridPtr grid;
    std::vector<double> v1;
    std::vector<double> v2;
    std::vector<unsigned char> node;  // 1 where |Psi|^2 < kNodeThreshold * max
    double time = 0.0;

    /// Bilinear, periodic. Returns {v1, v2}; `flagged` set if the nearest node is a node.
    std::array<double, 2> at(double x1, double x2, bool* flagged = nullptr) const;
};

VelocityField2D velocity_field(const ExactState2D& state, double max_speed);

struct ConfigTrajectory {
    std::vector<double> times;
    std::vector<std::array<double, 2>> points;
    std::size_t clamped_steps = 0;
};

/// Midpoint (RK2) integration of dx_i/dt = Im[d_i Psi / Psi] through a
/// snapshot series; the midpoint field is the average of the bracketing snapshots.
std::vector<ConfigTrajectory> exact_trajectories(std::span<const ExactState2D> series,
                                                 std::span<const std::array<double, 2>> starts);

}  // namespace tdqmc
