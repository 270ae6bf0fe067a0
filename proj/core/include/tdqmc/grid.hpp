#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "tdqmc/fft.hpp"

namespace tdqmc {

/// Uniform periodic grid x_i = x_min + i*dx, i = 0..n-1, with dx = (x_max - x_min)/n.
///
/// The right end point x_max is the periodic image of x_min and is not a grid
/// node. Wavenumbers follow FFT ordering: 0, dk, ..., (n/2-1)dk, -n/2 dk, ..., -dk.
class Grid1D {
public:
    Grid1D(double x_min, double x_max, std::size_t n_points);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t size() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    double length() const noexcept { return x_max_ - x_min_; }

    double position(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx_; }
    std::span<const double> positions() const noexcept { return x_; }
    std::span<const double> k_values() const noexcept { return k_; }

    /// x_min == -x_max, so node n-i mirrors node i.
    bool symmetric_about_origin() const noexcept;
    bool same_as(const Grid1D& other) const noexcept;

    const FftPlan1D& fft() const noexcept { return *fft_; }

private:
    double x_min_;
    double x_max_;
    std::size_t n_;
    double dx_;
    std::vector<double> x_;
    std::vector<double> k_;
    std::shared_ptr<const FftPlan1D> fft_;
};

using GridPtr = std::shared_ptr<const Grid1D>;

/// Validating constructor: n must be a power of two >= 16 and x_max > x_min.
GridPtr make_grid(double x_min, double x_max, std::size_t n_points);

/// Throws ShapeError unless both grids describe the same nodes.
void require_same_grid(const Grid1D& a, const Grid1D& b);

struct Wavefunction1D {
    GridPtr grid;
    std::vector<Complex> amplitudes;

    Wavefunction1D() = default;
    explicit Wavefunction1D(GridPtr g) : grid(std::move(g)), amplitudes(grid->size()) {}
    Wavefunction1D(GridPtr g, std::vector<Complex> a);

    double norm_squared() const;
};

struct PotentialGrid {
    GridPtr grid;
    std::vector<double> values;

    PotentialGrid() = default;
    explicit PotentialGrid(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
    PotentialGrid(GridPtr g, std::vector<double> v);
};

double norm_squared(std::span<const Complex> psi, double dx);

/// Scales psi in place to unit norm; throws DegenerateError on zero or non-finite norm.
void normalize_in_place(std::span<Complex> psi, double dx);
Wavefunction1D normalize(Wavefunction1D wave);

std::vector<double> density(const Wavefunction1D& wave);
void density_into(std::span<const Complex> psi, std::span<double> out);

/// Inverse-CDF sampler for a density tabulated on grid nodes.
///
/// Each node carries the mass density[i]*dx spread uniformly over the cell
/// [x_i - dx/2, x_i + dx/2), so the CDF is piecewise linear.
class InverseCdf {
public:
    InverseCdf(std::span<const double> density, const Grid1D& grid);

    /// u in [0, 1).
    double operator()(double u) const;

private:
    double x_min_;
    double dx_;
    std::vector<double> cumulative_;  // size n+1, normalized to end at 1
};

double sample_inverse_cdf(std::span<const double> density, const Grid1D& grid, double u);

enum class TimeMode { real, imaginary };

/// Strang split-operator step exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) with a spectral
/// kinetic term. Imaginary mode substitutes dt -> -i dtau and renormalizes.
///
/// Holds only immutable tables, so one instance can be shared by many threads.
class SplitStepPropagator {
public:
    SplitStepPropagator(GridPtr grid, double dt, TimeMode mode);

    const Grid1D& grid() const noexcept { return *grid_; }
    double dt() const noexcept { return dt_; }
    TimeMode mode() const noexcept { return mode_; }

    void step(std::span<Complex> psi, std::span<const double> potential) const;

private:
    GridPtr grid_;
    double dt_;
    TimeMode mode_;
    std::vector<Complex> kinetic_factor_;  // already divided by n for the inverse FFT
    std::vector<double> kinetic_decay_;    // imaginary time: the same factor, real
};

Wavefunction1D split_step(const Wavefunction1D& wave, const PotentialGrid& potential, double dt,
                          TimeMode mode);

/// Band-limited (trigonometric) interpolant of a periodic wave: evaluates psi(x)
/// and psi'(x) exactly for any wave representable on the grid.
class SpectralEvaluator {
public:
    SpectralEvaluator(std::span<const Complex> psi, const Grid1D& grid);

    std::pair<Complex, Complex> value_and_derivative(double x) const;
    double max_density() const noexcept { return max_density_; }

private:
    const Grid1D* grid_;
    std::vector<Complex> coefficients_;  // forward FFT / n
    double max_density_ = 0.0;
};

struct BohmVelocity {
    double velocity = 0.0;
    bool clamped = false;
};

/// Relative density below which a point counts as a node.
inline constexpr double kNodeThreshold = 1e-12;

/// v = Im[psi'(x)/psi(x)] with hbar = m = 1. Inside a node the speed is
/// limited to max_speed and the result is flagged.
BohmVelocity bohm_velocity(const SpectralEvaluator& wave, double x,
                           double max_speed = std::numeric_limits<double>::infinity());
BohmVelocity bohm_velocity(const Wavefunction1D& wave, double x,
                           double max_speed = std::numeric_limits<double>::infinity());

/// <psi| -1/2 d^2/dx^2 |psi> evaluated spectrally.
double kinetic_energy(std::span<const Complex> psi, const Grid1D& grid);
double potential_energy(std::span<const Complex> psi, std::span<const double> potential, double dx);
double single_particle_energy(const Wavefunction1D& wave, const PotentialGrid& potential);

/// Largest |psi|^2 within the outer `band` fraction of the grid on either side.
double boundary_density(std::span<const Complex> psi, double band = 0.05);

/// Normalized Gaussian packet whose density has standard deviation `sigma`:
/// psi ~ exp(-(x-center)^2 / (4 sigma^2) + i k0 x).
Wavefunction1D gaussian_wave(GridPtr grid, double center, double sigma, double k0 = 0.0);

}  // namespace tdqmc
