#include "tdqmc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdqmc/error.hpp"

namespace tdqmc {
namespace {

void require_symmetric(const Grid1D& grid) {
    if (!grid.symmetric_about_origin()) {
        throw ConfigError("coherence: grid must be symmetric about x = 0");
    }
}

std::size_t mirror(std::size_t i, std::size_t n) { return (n - i) % n; }

/// Accumulates the two coherence metrics from the diagonal and anti-diagonal.
template <class Diag, class Anti>
CoherenceSample coherence_from(std::size_t n, Diag diag, Anti anti) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, diag(i));
    const double cut = kCoherenceMaskLevel * max_diag;
    double anti_sum = 0.0;
    double diag_sum = 0.0;
    std::size_t count = 0;
    // node 0 sits on the periodic seam and has no mirror partner
    for (std::size_t i = 1; i < n; ++i) {
        const double d = diag(i);
        if (!(d > cut)) continue;
        anti_sum += anti(i);
        diag_sum += d;
        ++count;
    }
    CoherenceSample s;
    if (count == 0) return s;
    s.raw = anti_sum / static_cast<double>(count);
    s.degree = diag_sum > 0.0 ? anti_sum / diag_sum : 0.0;
    return s;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double expectation(const DensityMatrixCoord& rho, std::span<const double> diagonal_observable) {
    const std::size_t n = rho.size();
    if (diagonal_observable.size() != n) throw ShapeError("expectation: observable length does not match grid");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += rho.at(i, i).real() * diagonal_observable[i];
    return sum * rho.grid->dx();
}

double expectation_kernel(const DensityMatrixCoord& rho, std::span<const Complex> kernel) {
    const std::size_t n = rho.size();
    if (kernel.size() != n * n) throw ShapeError("expectation: kernel shape does not match grid");
    Complex sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) sum += rho.at(i, j) * kernel[j * n + i];
    }
    const double dx = rho.grid->dx();
    return sum.real() * dx * dx;
}

CoherenceSample coherence(const DensityMatrixCoord& rho) {
    require_symmetric(*rho.grid);
    const std::size_t n = rho.size();
    return coherence_from(
        n, [&](std::size_t i) { return rho.at(i, i).real(); },
        [&](std::size_t i) { return std::abs(rho.at(i, mirror(i, n))); });
}

CoherenceSample coherence(const WaveEnsemble& waves) {
    require_symmetric(*waves.grid());
    const std::size_t n = waves.points();
    const std::size_t m = waves.count();
    if (m == 0) throw DegenerateError("coherence: empty ensemble");
    std::vector<double> diag(n, 0.0);
    std::vector<Complex> anti(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const auto w = waves.wave(k);
        for (std::size_t i = 0; i < n; ++i) {
            diag[i] += std::norm(w[i]);
            anti[i] += std::conj(w[i]) * w[mirror(i, n)];
        }
    }
    const double inv = 1.0 / static_cast<double>(m);
    return coherence_from(
        n, [&](std::size_t i) { return diag[i] * inv; }, [&](std::size_t i) { return std::abs(anti[i]) * inv; });
}

CoherenceSample coherence(const ExactState2D& state) {
    require_symmetric(*state.grid);
    const std::size_t n = state.size();
    const double dx = state.grid->dx();
    const double trace = state.norm_squared();
    if (!(trace > 0.0)) throw DegenerateError("coherence: zero state");
    std::vector<double> diag(n, 0.0);
    std::vector<double> anti(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = mirror(i, n);
        Complex a = 0.0;
        double d = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const Complex p = state.at(i, l);
            a += std::conj(p) * state.at(j, l);
            d += std::norm(p);
        }
        diag[i] = d * dx / trace;
        anti[i] = std::abs(a) * dx / trace;
    }
    return coherence_from(n, [&](std::size_t i) { return diag[i]; }, [&](std::size_t i) { return anti[i]; });
}

double coherence_antidiagonal(const DensityMatrixCoord& rho) { return coherence(rho).raw; }

void CoherenceTrace::push(double time, const CoherenceSample& s) {
    times.push_back(time);
    raw.push_back(s.raw);
    degree.push_back(s.degree);
    const double r0 = raw.front();
    const double d0 = degree.front();
    normalized.push_back(r0 > 0.0 ? s.raw / r0 : 0.0);
    degree_normalized.push_back(d0 > 0.0 ? s.degree / d0 : 0.0);
}

double CoherenceTrace::first_time_below(double level, bool use_degree) const {
    const auto& col = use_degree ? degree_normalized : normalized;
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] < level) return times[i];
    }
    return -1.0;
}

double sample_mean(std::span<const double> samples) {
    if (samples.empty()) throw DegenerateError("mean of an empty sample");
    double s = 0.0;
    for (double v : samples) s += v;
    return s / static_cast<double>(samples.size());
}

double population_std(std::span<const double> samples) {
    const double mu = sample_mean(samples);
    double s = 0.0;
    for (double v : samples) s += (v - mu) * (v - mu);
    return std::sqrt(s / static_cast<double>(samples.size()));
}

double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t m = samples.size();
    if (m < 2) throw DegenerateError("kde: need at least two samples");
    const double mu = sample_mean(samples);
    double ss = 0.0;
    for (double v : samples) ss += (v - mu) * (v - mu);
    const double s = std::sqrt(ss / static_cast<double>(m - 1));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = s;
    if (iqr > 0.0) spread = std::min(s, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

std::vector<double> kde_density(std::span<const double> samples, const Grid1D& grid, double bandwidth) {
    if (samples.size() < 2) throw DegenerateError("kde: need at least two samples");
    double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
    if (!(h > 0.0)) h = grid.dx();  // all samples coincide
    const std::size_t n = grid.size();
    const double dx = grid.dx();
    const double reach = 8.0 * h;
    const double inv_2h2 = 1.0 / (2.0 * h * h);
    std::vector<double> out(n, 0.0);
    for (double x : samples) {
        const double lo = std::ceil((x - reach - grid.x_min()) / dx);
        const double hi = std::floor((x + reach - grid.x_min()) / dx);
        const auto i0 = static_cast<long long>(std::max(lo, 0.0));
        const auto i1 = static_cast<long long>(std::min(hi, static_cast<double>(n) - 1.0));
        for (long long i = i0; i <= i1; ++i) {
            const double d = grid.position(static_cast<std::size_t>(i)) - x;
            out[static_cast<std::size_t>(i)] += std::exp(-d * d * inv_2h2);
        }
    }
    double total = 0.0;
    for (double v : out) total += v;
    if (!(total > 0.0)) throw DegenerateError("kde: samples lie outside the grid");
    const double scale = 1.0 / (total * dx);
    for (auto& v : out) v *= scale;
    return out;
}

double l1_deviation(std::span<const double> p, std::span<const double> q, const Grid1D& grid) {
    if (p.size() != grid.size() || q.size() != grid.size()) throw ShapeError("l1_deviation: length does not match grid");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return s * grid.dx();
}

std::vector<double> resample_density(std::span<const double> values, const Grid1D& from, const Grid1D& to) {
    if (values.size() != from.size()) throw ShapeError("resample_density: length does not match source grid");
    if (from.same_as(to)) return {values.begin(), values.end()};
    const std::size_t n = from.size();
    std::vector<double> out(to.size(), 0.0);
    for (std::size_t i = 0; i < to.size(); ++i) {
        const double u = (to.position(i) - from.x_min()) / from.dx();
        if (u < 0.0 || u > static_cast<double>(n - 1)) continue;
        const auto j = std::min(static_cast<std::size_t>(u), n - 2);
        const double f = u - static_cast<double>(j);
        out[i] = (1.0 - f) * values[j] + f * values[j + 1];
    }
    double total = 0.0;
    for (double v : out) total += v;
    if (total > 0.0) {
        const double scale = 1.0 / (total * to.dx());
        for (auto& v : out) v *= scale;
    }
    return out;
}

std::vector<double> smooth_density(std::span<const double> p, const Grid1D& grid, double h) {
    if (p.size() != grid.size()) throw ShapeError("smooth_density: length does not match grid");
    if (!(h > 0.0)) return {p.begin(), p.end()};
    std::vector<Complex> work(p.begin(), p.end());
    grid.fft().forward(work);
    const auto k = grid.k_values();
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    for (std::size_t i = 0; i < work.size(); ++i) work[i] *= std::exp(-0.5 * k[i] * k[i] * h * h) * inv_n;
    grid.fft().inverse(work);
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = work[i].real();
    return out;
}

double fringe_visibility(std::span<const double> p, const Grid1D& grid, const VisibilityOptions& options) {
    if (!(options.window > 0.0 && options.window <= 1.0)) throw ParameterError("fringe_visibility: window must be in (0, 1]");
    const auto s = smooth_density(p, grid, options.smoothing);
    const std::size_t n = s.size();
    const double center = 0.5 * (grid.x_min() + grid.x_max());
    const double half = 0.5 * options.window * grid.length();

    std::size_t first = n, last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(grid.position(i) - center) <= half) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    }
    if (first == n || last < first + 2) return 0.0;

    double wmax = 0.0;
    for (std::size_t i = first; i <= last; ++i) wmax = std::max(wmax, s[i]);
    if (!(wmax > 0.0)) return 0.0;
    const double floor = options.relative_floor * wmax;

    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
    for (std::size_t i = first + 1; i < last; ++i) {
        const double l = s[i - 1], c = s[i], r = s[i + 1];
        if (c > l && c >= r && c >= floor) maxima.push_back(i);
        if (c < l && c <= r) minima.push_back(i);
    }
    if (maxima.size() < 3) return 0.0;

    // Interior extrema only: the outermost maxima sit on the envelope flanks, and a
    // lone dip between two lobes is not a fringe.
    double sum_max = 0.0;
    for (std::size_t m = 1; m + 1 < maxima.size(); ++m) sum_max += s[maxima[m]];
    double sum_min = 0.0;
    std::size_t n_min = 0;
    for (auto i : minima) {
        if (i > maxima.front() && i < maxima.back()) {
            sum_min += s[i];
            ++n_min;
        }
    }
    if (n_min == 0) return 0.0;
    const double i_max = sum_max / static_cast<double>(maxima.size() - 2);
    const double i_min = std::max(0.0, sum_min / static_cast<double>(n_min));
    return (i_max - i_min) / (i_max + i_min);
}

}  // namespace tdqmc
