#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tdqmc/grid.hpp"

namespace tdqmc {

/// M guide waves on one grid, stored contiguously (wave k occupies row k).
class WaveEnsemble {
public:
    WaveEnsemble() = default;
    WaveEnsemble(GridPtr grid, std::size_t count)
        : grid_(std::move(grid)), count_(count), data_(count * grid_->size()) {}

    const GridPtr& grid() const noexcept { return grid_; }
    std::size_t count() const noexcept { return count_; }
    std::size_t points() const noexcept { return grid_->size(); }

    std::span<Complex> wave(std::size_t k) noexcept { return {data_.data() + k * points(), points()}; }
    std::span<const Complex> wave(std::size_t k) const noexcept {
        return {data_.data() + k * points(), points()};
    }

    std::span<const Complex> data() const noexcept { return data_; }
    std::span<Complex> data() noexcept { return data_; }

    Wavefunction1D to_wavefunction(std::size_t k) const {
        const auto w = wave(k);
        return Wavefunction1D(grid_, std::vector<Complex>(w.begin(), w.end()));
    }

    void set(std::size_t k, std::span<const Complex> amplitudes) {
        if (amplitudes.size() != points()) throw std::length_error("WaveEnsemble::set: wrong length");
        std::copy(amplitudes.begin(), amplitudes.end(), wave(k).begin());
    }

    /// Mean of |phi_k|^2 over k, i.e. the diagonal of the guide-wave density matrix.
    std::vector<double> mean_density() const {
        std::vector<double> out(points(), 0.0);
        for (std::size_t k = 0; k < count_; ++k) {
            const auto w = wave(k);
            for (std::size_t i = 0; i < w.size(); ++i) out[i] += std::norm(w[i]);
        }
        const double inv = 1.0 / static_cast<double>(count_);
        for (auto& v : out) v *= inv;
        return out;
    }

private:
    GridPtr grid_;
    std::size_t count_ = 0;
    std::vector<Complex> data_;
};

}  // namespace tdqmc
