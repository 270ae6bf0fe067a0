#include "tdqmc/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "tdqmc/error.hpp"

namespace tdqmc {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_points)
    : x_min_(x_min), x_max_(x_max), n_(n_points), dx_((x_max - x_min) / static_cast<double>(n_points)) {
    x_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) x_[i] = position(i);
    k_.resize(n_);
    const double dk = 2.0 * std::numbers::pi / (x_max_ - x_min_);
    for (std::size_t i = 0; i < n_; ++i) {
        const auto m = static_cast<long long>(i);
        const auto half = static_cast<long long>(n_ / 2);
        k_[i] = dk * static_cast<double>(m < half ? m : m - static_cast<long long>(n_));
    }
    fft_ = fft_plan_1d(n_);
}

bool Grid1D::symmetric_about_origin() const noexcept {
    return std::abs(x_min_ + x_max_) <= 1e-12 * std::max(1.0, x_max_);
}

bool Grid1D::same_as(const Grid1D& other) const noexcept {
    return n_ == other.n_ && x_min_ == other.x_min_ && x_max_ == other.x_max_;
}

GridPtr make_grid(double x_min, double x_max, std::size_t n_points) {
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw ConfigError("grid: x_max must exceed x_min (got [" + std::to_string(x_min) + ", " +
                          std::to_string(x_max) + "])");
    }
    if (n_points < 16 || !std::has_single_bit(n_points)) {
        throw ConfigError("grid: n_points must be a power of two >= 16 (got " +
                          std::to_string(n_points) + ")");
    }
    return std::make_shared<const Grid1D>(x_min, x_max, n_points);
}

void require_same_grid(const Grid1D& a, const Grid1D& b) {
    if (!a.same_as(b)) throw ShapeError("grid mismatch");
}

Wavefunction1D::Wavefunction1D(GridPtr g, std::vector<Complex> a) : grid(std::move(g)), amplitudes(std::move(a)) {
    if (amplitudes.size() != grid->size()) throw ShapeError("wavefunction length does not match grid");
}

double Wavefunction1D::norm_squared() const { return tdqmc::norm_squared(amplitudes, grid->dx()); }

PotentialGrid::PotentialGrid(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw ShapeError("potential length does not match grid");
}

double norm_squared(std::span<const Complex> psi, double dx) {
    double sum = 0.0;
    for (const auto& c : psi) sum += std::norm(c);
    return sum * dx;
}

void normalize_in_place(std::span<Complex> psi, double dx) {
    const double n2 = norm_squared(psi, dx);
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateError("normalize: wave has zero or non-finite norm");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& c : psi) c *= scale;
}

Wavefunction1D normalize(Wavefunction1D wave) {
    normalize_in_place(wave.amplitudes, wave.grid->dx());
    return wave;
}

std::vector<double> density(const Wavefunction1D& wave) {
    std::vector<double> out(wave.amplitudes.size());
    density_into(wave.amplitudes, out);
    return out;
}

void density_into(std::span<const Complex> psi, std::span<double> out) {
    if (psi.size() != out.size()) throw ShapeError("density: output length mismatch");
    std::transform(psi.begin(), psi.end(), out.begin(), [](const Complex& c) { return std::norm(c); });
}

InverseCdf::InverseCdf(std::span<const double> density, const Grid1D& grid)
    : x_min_(grid.x_min()), dx_(grid.dx()), cumulative_(density.size() + 1, 0.0) {
    if (density.size() != grid.size()) throw ShapeError("sample_inverse_cdf: density length does not match grid");
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double d = density[i];
        if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError("sample_inverse_cdf: density must be finite and nonnegative");
        cumulative_[i + 1] = cumulative_[i] + d;
    }
    const double total = cumulative_.back();
    if (!(total > 0.0)) throw DegenerateError("sample_inverse_cdf: density is identically zero");
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

double InverseCdf::operator()(double u) const {
    u = std::clamp(u, 0.0, std::nextafter(1.0, 0.0));
    // first cumulative value strictly above u; the cell before it has positive mass
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto cell = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    const double lo = cumulative_[cell];
    const double hi = cumulative_[cell + 1];
    const double frac = (u - lo) / (hi - lo);
    return x_min_ + (static_cast<double>(cell) - 0.5 + frac) * dx_;
}

double sample_inverse_cdf(std::span<const double> density, const Grid1D& grid, double u) {
    return InverseCdf(density, grid)(u);
}

SplitStepPropagator::SplitStepPropagator(GridPtr grid, double dt, TimeMode mode)
    : grid_(std::move(grid)), dt_(dt), mode_(mode) {
    if (!(std::abs(dt) > 0.0) || !std::isfinite(dt)) throw ParameterError("split_step: dt must be nonzero and finite");
    const auto k = grid_->k_values();
    const double inv_n = 1.0 / static_cast<double>(grid_->size());
    kinetic_factor_.resize(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double t = 0.5 * k[i] * k[i] * dt_;
        kinetic_factor_[i] = (mode_ == TimeMode::real ? std::polar(1.0, -t) : Complex(std::exp(-t), 0.0)) * inv_n;
    }
    if (mode_ == TimeMode::imaginary) {
        kinetic_decay_.resize(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) kinetic_decay_[i] = kinetic_factor_[i].real();
    }
}

namespace {

// exp(-i v h) for every node. Small angles use a truncated Taylor series (error
// below 1e-17 for |angle| <= 0.78) that the compiler can vectorize; std::polar
// handles anything larger.
void half_step_phases(std::span<const double> potential, double h, std::span<Complex> out) {
    const std::size_t n = potential.size();
    double largest = 0.0;
    for (std::size_t i = 0; i < n; ++i) largest = std::max(largest, std::abs(potential[i] * h));
    if (!(largest <= 0.78)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = std::polar(1.0, -potential[i] * h);
        return;
    }
    thread_local std::vector<double> re, im;
    re.resize(n);
    im.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = potential[i] * h;
        const double a2 = a * a;
        double c = 1.0 / 20922789888000.0;  // 1/16!
        double si = 1.0 / 355687428096000.0;  // 1/17!
        c = 1.0 / 87178291200.0 - a2 * c;     // 1/14!
        si = 1.0 / 1307674368000.0 - a2 * si;  // 1/15!
        c = 1.0 / 479001600.0 - a2 * c;
        si = 1.0 / 6227020800.0 - a2 * si;
        c = 1.0 / 3628800.0 - a2 * c;
        si = 1.0 / 39916800.0 - a2 * si;
        c = 1.0 / 40320.0 - a2 * c;
        si = 1.0 / 362880.0 - a2 * si;
        c = 1.0 / 720.0 - a2 * c;
        si = 1.0 / 5040.0 - a2 * si;
        c = 1.0 / 24.0 - a2 * c;
        si = 1.0 / 120.0 - a2 * si;
        c = 0.5 - a2 * c;
        si = 1.0 / 6.0 - a2 * si;
        re[i] = 1.0 - a2 * c;
        im[i] = -a * (1.0 - a2 * si);
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = Complex(re[i], im[i]);
}

}  // namespace

void SplitStepPropagator::step(std::span<Complex> psi, std::span<const double> potential) const {
    const std::size_t n = grid_->size();
    if (psi.size() != n || potential.size() != n) throw ShapeError("split_step: wave or potential not on the propagator grid");

    const double h = 0.5 * dt_;
    if (mode_ == TimeMode::real) {
        thread_local std::vector<Complex> half;
        half.resize(n);
        half_step_phases(potential, h, half);
        for (std::size_t i = 0; i < n; ++i) psi[i] *= half[i];
        grid_->fft().forward(psi);
        for (std::size_t i = 0; i < n; ++i) psi[i] *= kinetic_factor_[i];
        grid_->fft().inverse(psi);
        for (std::size_t i = 0; i < n; ++i) psi[i] *= half[i];
        return;
    }

    thread_local Eigen::ArrayXd decay;
    decay = (Eigen::Map<const Eigen::ArrayXd>(potential.data(), static_cast<Eigen::Index>(n)) * -h).exp();
    const double* d = decay.data();
    for (std::size_t i = 0; i < n; ++i) psi[i] *= d[i];
    grid_->fft().forward(psi);
    for (std::size_t i = 0; i < n; ++i) psi[i] *= kinetic_decay_[i];
    grid_->fft().inverse(psi);
    for (std::size_t i = 0; i < n; ++i) psi[i] *= d[i];
    normalize_in_place(psi, grid_->dx());
}

Wavefunction1D split_step(const Wavefunction1D& wave, const PotentialGrid& potential, double dt, TimeMode mode) {
    require_same_grid(*wave.grid, *potential.grid);
    Wavefunction1D out = wave;
    SplitStepPropagator(wave.grid, dt, mode).step(out.amplitudes, potential.values);
    return out;
}

SpectralEvaluator::SpectralEvaluator(std::span<const Complex> psi, const Grid1D& grid)
    : grid_(&grid), coefficients_(psi.begin(), psi.end()) {
    if (psi.size() != grid.size()) throw ShapeError("bohm_velocity: wave length does not match grid");
    for (const auto& c : psi) max_density_ = std::max(max_density_, std::norm(c));
    grid.fft().forward(coefficients_);
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    for (auto& c : coefficients_) c *= inv_n;
}

std::pair<Complex, Complex> SpectralEvaluator::value_and_derivative(double x) const {
    const std::size_t n = coefficients_.size();
    const std::size_t half = n / 2;
    const double s = x - grid_->x_min();
    const double dk = 2.0 * std::numbers::pi / grid_->length();
    const Complex step = std::polar(1.0, dk * s);
    const Complex i_unit(0.0, 1.0);

    Complex value = coefficients_[0];
    Complex deriv = 0.0;
    Complex z = 1.0;
    for (std::size_t j = 1; j < half; ++j) {
        // refresh the recurrence periodically to bound phase drift
        z = (j % 32 == 0) ? std::polar(1.0, dk * s * static_cast<double>(j)) : z * step;
        const Complex pos = coefficients_[j] * z;
        const Complex neg = coefficients_[n - j] * std::conj(z);
        value += pos + neg;
        deriv += i_unit * (dk * static_cast<double>(j)) * (pos - neg);
    }
    // Nyquist mode contributes a cosine; its derivative is dropped
    value += coefficients_[half] * std::cos(dk * static_cast<double>(half) * s);
    return {value, deriv};
}

BohmVelocity bohm_velocity(const SpectralEvaluator& wave, double x, double max_speed) {
    const auto [psi, dpsi] = wave.value_and_derivative(x);
    const double rho = std::norm(psi);
    BohmVelocity out;
    if (rho < kNodeThreshold * wave.max_density()) {
        out.clamped = true;
        if (rho == 0.0) return out;
        const double v = std::imag(dpsi * std::conj(psi)) / rho;
        out.velocity = std::clamp(v, -max_speed, max_speed);
        return out;
    }
    out.velocity = std::imag(dpsi * std::conj(psi)) / rho;
    return out;
}

BohmVelocity bohm_velocity(const Wavefunction1D& wave, double x, double max_speed) {
    return bohm_velocity(SpectralEvaluator(wave.amplitudes, *wave.grid), x, max_speed);
}

double kinetic_energy(std::span<const Complex> psi, const Grid1D& grid) {
    if (psi.size() != grid.size()) throw ShapeError("kinetic_energy: wave length does not match grid");
    thread_local std::vector<Complex> work;
    work.assign(psi.begin(), psi.end());
    grid.fft().forward(work);
    const auto k = grid.k_values();
    double sum = 0.0;
    for (std::size_t i = 0; i < work.size(); ++i) sum += 0.5 * k[i] * k[i] * std::norm(work[i]);
    return sum * grid.dx() / static_cast<double>(grid.size());
}

double potential_energy(std::span<const Complex> psi, std::span<const double> potential, double dx) {
    if (psi.size() != potential.size()) throw ShapeError("potential_energy: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) sum += potential[i] * std::norm(psi[i]);
    return sum * dx;
}

double single_particle_energy(const Wavefunction1D& wave, const PotentialGrid& potential) {
    require_same_grid(*wave.grid, *potential.grid);
    return kinetic_energy(wave.amplitudes, *wave.grid) +
           potential_energy(wave.amplitudes, potential.values, wave.grid->dx());
}

double boundary_density(std::span<const Complex> psi, double band) {
    const std::size_t n = psi.size();
    const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(band * static_cast<double>(n)));
    double worst = 0.0;
    for (std::size_t i = 0; i < width && i < n; ++i) {
        worst = std::max({worst, std::norm(psi[i]), std::norm(psi[n - 1 - i])});
    }
    return worst;
}

Wavefunction1D gaussian_wave(GridPtr grid, double center, double sigma, double k0) {
    if (!(sigma > 0.0)) throw ParameterError("gaussian_wave: sigma must be positive");
    Wavefunction1D w(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const double x = grid->position(i);
        const double d = x - center;
        w.amplitudes[i] = std::polar(std::exp(-d * d / (4.0 * sigma * sigma)), k0 * x);
    }
    return normalize(std::move(w));
}

}  // namespace tdqmc
