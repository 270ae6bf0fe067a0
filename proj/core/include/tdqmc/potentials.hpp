#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdqmc/grid.hpp"

namespace tdqmc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Nucleus {
    double position = 0.0;  // a.u.
    double strength = 0.0;  // soft-core charge a_w
};

/// Clamped nuclei. Inactive after the sudden release, when v_en vanishes.
struct NuclearFrame {
    std::vector<Nucleus> nuclei;
    bool active = true;

    /// Single nucleus at the origin.
    static NuclearFrame atom(double strength = 2.0);
    /// Two nuclei at +-separation/2.
    static NuclearFrame molecule(double separation = 8.0, double strength = 1.0);

    double total_strength() const noexcept;
};

/// -sum_w a_w / sqrt(1 + (x - X_w)^2), or 0 when the frame is inactive.
double v_en(double x, const NuclearFrame& frame);
PotentialGrid v_en_grid(const GridPtr& grid, const NuclearFrame& frame);

/// Soft-core repulsion b / sqrt(1 + separation^2).
inline double v_ee(double separation, double b) noexcept {
    return b / std::sqrt(1.0 + separation * separation);
}

/// exp(-distance^2 / (2 sigma^2)); throws ParameterError for sigma <= 0.
double kernel_weight(double distance, double sigma);

enum class CouplingMode { optimized, ultra_correlated, mean_field };

std::string_view to_string(CouplingMode mode) noexcept;
CouplingMode parse_coupling_mode(std::string_view name);

struct CouplingParams {
    double b = 1.0;
    std::vector<double> alpha{0.6, 0.6};
    CouplingMode mode = CouplingMode::optimized;
    double sigma_floor = 1e-3;

    void validate() const;
};

/// Kernel-weighted effective e-e potential seen by guide wave `k_index` of
/// electron i, built from the walkers of partner electron j.
PotentialGrid effective_potential(const GridPtr& grid, std::span<const double> partner_walkers,
                                  std::size_t k_index, double sigma, double b, CouplingMode mode);

/// sigma_j = max(alpha_j * population_std(walkers_j), sigma_floor).
double sigma_update(std::span<const double> walkers, double alpha, double sigma_floor);

struct EffectivePotentialOptions {
    /// Skip partners farther than cutoff_sigmas * sigma (optimized mode only).
    /// At 6 sigma each dropped weight is 1.5e-8 and a crowd of them moves the
    /// potential past 1e-8; 7 sigma keeps the change below that.
    bool kernel_cutoff = false;
    double cutoff_sigmas = 7.0;
};

/// Adds the effective potential of every guide wave to the rows of `out`
/// (M x n, row k for guide wave k). Optimized mode forms the row-normalized
/// kernel matrix W and evaluates W * F with F(l, x) = v_ee(x - x_l).
void accumulate_effective_potentials(const Grid1D& grid, std::span<const double> partner_walkers,
                                     double sigma, double b, CouplingMode mode,
                                     const EffectivePotentialOptions& options, RowMatrix& out);

}  // namespace tdqmc
