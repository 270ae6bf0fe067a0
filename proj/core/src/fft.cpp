#include "tdqmc/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace tdqmc {
namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_complex* as_fftw(std::span<Complex> data) {
    return reinterpret_cast<fftw_complex*>(data.data());
}

}  // namespace

FftPlan1D::FftPlan1D(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(n);
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, kPlanFlags);
    inverse_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, kPlanFlags);
    fftw_free(buf);
    if (!forward_ || !inverse_) throw std::runtime_error("fftw: failed to create 1D plan");
}

FftPlan1D::~FftPlan1D() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
}

void FftPlan1D::forward(std::span<Complex> data) const {
    fftw_execute_dft(forward_, as_fftw(data), as_fftw(data));
}

void FftPlan1D::inverse(std::span<Complex> data) const {
    fftw_execute_dft(inverse_, as_fftw(data), as_fftw(data));
}

FftPlan2D::FftPlan2D(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(n * n);
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_FORWARD, kPlanFlags);
    inverse_ = fftw_plan_dft_2d(ni, ni, buf, buf, FFTW_BACKWARD, kPlanFlags);
    fftw_free(buf);
    if (!forward_ || !inverse_) throw std::runtime_error("fftw: failed to create 2D plan");
}

FftPlan2D::~FftPlan2D() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
}

void FftPlan2D::forward(std::span<Complex> data) const {
    fftw_execute_dft(forward_, as_fftw(data), as_fftw(data));
}

void FftPlan2D::inverse(std::span<Complex> data) const {
    fftw_execute_dft(inverse_, as_fftw(data), as_fftw(data));
}

std::shared_ptr<const FftPlan1D> fft_plan_1d(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, std::shared_ptr<const FftPlan1D>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const FftPlan1D>(n);
    return slot;
}

std::shared_ptr<const FftPlan2D> fft_plan_2d(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, std::shared_ptr<const FftPlan2D>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const FftPlan2D>(n);
    return slot;
}

}  // namespace tdqmc
