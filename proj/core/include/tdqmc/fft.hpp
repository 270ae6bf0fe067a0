#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

struct fftw_plan_s;

namespace tdqmc {

using Complex = std::complex<double>;

/// In-place 1D complex FFT of fixed length.
///
/// Plans are built once with FFTW_ESTIMATE | FFTW_UNALIGNED, so they can be
/// executed on any contiguous std::complex<double> storage. Execution is
/// thread-safe; construction is serialized internally.
class FftPlan1D {
public:
    explicit FftPlan1D(std::size_t n);
    ~FftPlan1D();
    FftPlan1D(const FftPlan1D&) = delete;
    FftPlan1D& operator=(const FftPlan1D&) = delete;

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<Complex> data) const;
    /// Unnormalized inverse; divide by size() to undo forward().
    void inverse(std::span<Complex> data) const;

private:
    std::size_t n_;
    fftw_plan_s* forward_ = nullptr;
    fftw_plan_s* inverse_ = nullptr;
};

/// In-place 2D complex FFT on an n x n row-major array.
class FftPlan2D {
public:
    explicit FftPlan2D(std::size_t n);
    ~FftPlan2D();
    FftPlan2D(const FftPlan2D&) = delete;
    FftPlan2D& operator=(const FftPlan2D&) = delete;

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<Complex> data) const;
    void inverse(std::span<Complex> data) const;

private:
    std::size_t n_;
    fftw_plan_s* forward_ = nullptr;
    fftw_plan_s* inverse_ = nullptr;
};

/// Shared plan cache keyed by length.
std::shared_ptr<const FftPlan1D> fft_plan_1d(std::size_t n);
std::shared_ptr<const FftPlan2D> fft_plan_2d(std::size_t n);

}  // namespace tdqmc
