#include "tdqmc/density_matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "tdqmc/error.hpp"

namespace tdqmc {

using ComplexRowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double DensityMatrixCoord::trace() const {
    const std::size_t n = size();
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += at(i, i).real();
    return t * grid->dx();
}

double DensityMatrixCoord::purity() const {
    double s = 0.0;
    for (const auto& c : rho) s += std::norm(c);
    const double dx = grid->dx();
    return s * dx * dx;
}

double DensityMatrixCoord::hermiticity_error() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) worst = std::max(worst, std::abs(at(i, j) - std::conj(at(j, i))));
    }
    return worst;
}

std::vector<double> DensityMatrixCoord::diagonal() const {
    const std::size_t n = size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i).real();
    return d;
}

DensityMatrixCoord build_density_matrix(const WaveEnsemble& waves, double time) {
    if (waves.count() == 0) throw DegenerateError("build_density_matrix: no waves");
    const auto m = static_cast<Eigen::Index>(waves.count());
    const auto n = static_cast<Eigen::Index>(waves.points());
    // Eigen's product rounds differently with the alignment of its operands, so
    // work on owned (aligned) copies to make the bits independent of the caller's buffers
    const ComplexRowMatrix phi = Eigen::Map<const ComplexRowMatrix>(waves.data().data(), m, n);
    ComplexRowMatrix rho = phi.adjoint() * phi;
    rho /= static_cast<double>(m);

    DensityMatrixCoord out(waves.grid(), time);
    std::copy(rho.data(), rho.data() + rho.size(), out.rho.begin());
    return out;
}

DensityMatrixCoord build_density_matrix(std::span<const Wavefunction1D> waves, double time) {
    if (waves.empty()) throw DegenerateError("build_density_matrix: no waves");
    const GridPtr& grid = waves.front().grid;
    WaveEnsemble ensemble(grid, waves.size());
    for (std::size_t k = 0; k < waves.size(); ++k) {
        require_same_grid(*grid, *waves[k].grid);
        ensemble.set(k, waves[k].amplitudes);
    }
    return build_density_matrix(ensemble, time);
}

}  // namespace tdqmc
