#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdqmc/density_matrix.hpp"
#include "tdqmc/exact_solver.hpp"
#include "tdqmc/grid.hpp"
#include "tdqmc/wave_ensemble.hpp"

namespace tdqmc {

/// Tr(rho A) for a multiplicative observable A(x) tabulated on the grid.
double expectation(const DensityMatrixCoord& rho, std::span<const double> diagonal_observable);

/// Tr(rho A) = sum_ij rho(x_i, x_j) A(x_j, x_i) dx^2 for an integral kernel A
/// given as an n x n row-major array.
double expectation_kernel(const DensityMatrixCoord& rho, std::span<const Complex> kernel);

/// Relative diagonal level defining the occupied region used by the coherence metrics.
inline constexpr double kCoherenceMaskLevel = 1e-6;

/// Anti-diagonal coherence of one density matrix.
///   raw:    mean over the mask of |rho(x, -x)|
///   degree: sum over the mask of |rho(x, -x)| / sum of rho(x, x); 1 for a pure
///           state with |phi(x)| = |phi(-x)|, insensitive to packet spreading.
struct CoherenceSample {
    double raw = 0.0;
    double degree = 0.0;
};

/// Throws ConfigError unless the grid is symmetric about the origin.
CoherenceSample coherence(const DensityMatrixCoord& rho);
/// Same metrics straight from the guide waves, without forming the matrix.
CoherenceSample coherence(const WaveEnsemble& waves);
/// Same metrics for the reduced density matrix of an exact two-body state.
CoherenceSample coherence(const ExactState2D& state);

/// Mean of |rho(x, -x)| over the occupied region.
double coherence_antidiagonal(const DensityMatrixCoord& rho);

struct CoherenceTrace {
    std::vector<double> times;
    std::vector<double> raw;
    std::vector<double> normalized;         // raw / raw[0]
    std::vector<double> degree;
    std::vector<double> degree_normalized;  // degree / degree[0]

    void push(double time, const CoherenceSample& s);
    /// First time the chosen normalized column drops below `level`, or a negative value.
    double first_time_below(double level, bool use_degree = true) const;
};

/// Silverman rule of thumb: 0.9 min(s, IQR/1.34) M^(-1/5), sample std and
/// linearly interpolated quartiles.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE on the grid nodes, rescaled so that sum * dx = 1.
/// `bandwidth` <= 0 selects the Silverman value. Throws DegenerateError for < 2 samples.
std::vector<double> kde_density(std::span<const double> samples, const Grid1D& grid, double bandwidth = 0.0);

/// Integral of |p - q| dx.
double l1_deviation(std::span<const double> p, std::span<const double> q, const Grid1D& grid);

/// Linear interpolation of a tabulated density onto another grid, renormalized.
std::vector<double> resample_density(std::span<const double> values, const Grid1D& from, const Grid1D& to);

/// Gaussian smoothing by circular convolution, width `h` in a.u.
std::vector<double> smooth_density(std::span<const double> p, const Grid1D& grid, double h);

struct VisibilityOptions {
    double window = 0.5;         // central fraction of the grid extent
    double smoothing = 0.0;      // Gaussian width in a.u.; 0 disables
    double relative_floor = 0.02;  // extrema below this fraction of the window max are noise
};

/// (I_max - I_min) / (I_max + I_min) inside the central window. I_max averages the
/// interior local maxima (every maximum but the outermost two), I_min the local
/// minima between the outermost maxima. Fewer than three maxima gives 0.
double fringe_visibility(std::span<const double> p, const Grid1D& grid, const VisibilityOptions& options = {});

/// Population mean and standard deviation.
double sample_mean(std::span<const double> samples);
double population_std(std::span<const double> samples);

}  // namespace tdqmc
