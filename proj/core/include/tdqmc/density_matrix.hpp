#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdqmc/grid.hpp"
#include "tdqmc/wave_ensemble.hpp"

namespace tdqmc {

/// One-electron density matrix in coordinate representation.
///
/// Stored row-major as rho[i * n + j] = rho(x_i, x_j) with the bra on the
/// first index: for a guide-wave ensemble rho(x, x') = (1/M) sum_k conj(phi_k(x)) phi_k(x').
/// The continuum trace is sum_i rho(x_i, x_i) dx.
struct DensityMatrixCoord {
    GridPtr grid;
    std::vector<Complex> rho;
    double time = 0.0;

    DensityMatrixCoord() = default;
    DensityMatrixCoord(GridPtr g, double t) : grid(std::move(g)), rho(grid->size() * grid->size()), time(t) {}

    std::size_t size() const noexcept { return grid->size(); }
    Complex at(std::size_t i, std::size_t j) const noexcept { return rho[i * size() + j]; }
    Complex& at(std::size_t i, std::size_t j) noexcept { return rho[i * size() + j]; }

    double trace() const;
    /// Tr(rho^2) in continuum normalization.
    double purity() const;
    /// max_ij |rho_ij - conj(rho_ji)|
    double hermiticity_error() const;
    std::vector<double> diagonal() const;
};

/// (1/M) sum_k conj(phi_k(x)) phi_k(x'); waves must share a grid.
DensityMatrixCoord build_density_matrix(std::span<const Wavefunction1D> waves, double time = 0.0);
DensityMatrixCoord build_density_matrix(const WaveEnsemble& waves, double time = 0.0);

}  // namespace tdqmc
