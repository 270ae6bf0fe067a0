#include "tdqmc/exact_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include "tdqmc/error.hpp"

namespace tdqmc {
namespace {

using ComplexRowMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

const FftPlan2D& plan_for(const Grid1D& grid) {
    // the cache keeps plans alive for the process lifetime
    thread_local std::shared_ptr<const FftPlan2D> plan;
    if (!plan || plan->size() != grid.size()) plan = fft_plan_2d(grid.size());
    return *plan;
}

double max_boundary(const ExactState2D& s, double band = 0.05) {
    const std::size_t n = s.size();
    const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(band * static_cast<double>(n)));
    double worst = 0.0;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        const bool edge_row = i1 < width || i1 >= n - width;
        for (std::size_t i2 = 0; i2 < n; ++i2) {
            if (edge_row || i2 < width || i2 >= n - width) worst = std::max(worst, std::norm(s.at(i1, i2)));
        }
    }
    return worst;
}

void check_finite(const ExactState2D& s) {
    for (const auto& c : s.psi) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw NumericalError("exact solver: non-finite amplitude at t = " + std::to_string(s.time));
        }
    }
}

}  // namespace

double ExactState2D::norm_squared() const {
    double sum = 0.0;
    for (const auto& c : psi) sum += std::norm(c);
    const double dx = grid->dx();
    return sum * dx * dx;
}

void ExactState2D::normalize() {
    const double n2 = norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw DegenerateError("exact state has zero or non-finite norm");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& c : psi) c *= scale;
}

double ExactState2D::exchange_asymmetry() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) worst = std::max(worst, std::abs(at(i, j) - at(j, i)));
    }
    return worst;
}

ExactState2D product_state(const Wavefunction1D& first, const Wavefunction1D& second) {
    require_same_grid(*first.grid, *second.grid);
    ExactState2D s(first.grid);
    const std::size_t n = s.size();
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t i2 = 0; i2 < n; ++i2) s.at(i1, i2) = first.amplitudes[i1] * second.amplitudes[i2];
    }
    return s;
}

TwoBodyHamiltonian TwoBodyHamiltonian::from_frame(const GridPtr& grid, const NuclearFrame& frame, double b) {
    if (!(b >= 0.0)) throw ParameterError("two-body hamiltonian: b must be >= 0");
    return TwoBodyHamiltonian{v_en_grid(grid, frame), b};
}

double TwoBodyHamiltonian::potential(std::size_t i1, std::size_t i2) const {
    const auto& g = *one_body.grid;
    return one_body.values[i1] + one_body.values[i2] + v_ee(g.position(i1) - g.position(i2), b);
}

double exact_energy(const ExactState2D& state, const TwoBodyHamiltonian& h) {
    require_same_grid(*state.grid, *h.grid());
    const std::size_t n = state.size();
    const double dx = state.grid->dx();

    double v_sum = 0.0;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t i2 = 0; i2 < n; ++i2) v_sum += h.potential(i1, i2) * std::norm(state.at(i1, i2));
    }

    std::vector<Complex> work = state.psi;
    plan_for(*state.grid).forward(work);
    const auto k = state.grid->k_values();
    double t_sum = 0.0;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t i2 = 0; i2 < n; ++i2) {
            t_sum += 0.5 * (k[i1] * k[i1] + k[i2] * k[i2]) * std::norm(work[i1 * n + i2]);
        }
    }
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    return (t_sum / nn + v_sum) * dx * dx;
}

ExactPropagator::ExactPropagator(TwoBodyHamiltonian h, double dt, TimeMode mode)
    : h_(std::move(h)), dt_(dt), mode_(mode) {
    if (!(std::abs(dt) > 0.0) || !std::isfinite(dt)) throw ParameterError("exact propagator: dt must be nonzero and finite");
    const std::size_t n = h_.grid()->size();
    const auto k = h_.grid()->k_values();
    const double inv_nn = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    half_potential_.resize(n * n);
    kinetic_.resize(n * n);
    const double half = 0.5 * dt_;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t i2 = 0; i2 < n; ++i2) {
            const double v = h_.potential(i1, i2) * half;
            const double t = 0.5 * (k[i1] * k[i1] + k[i2] * k[i2]) * dt_;
            if (mode_ == TimeMode::real) {
                half_potential_[i1 * n + i2] = std::polar(1.0, -v);
                kinetic_[i1 * n + i2] = std::polar(inv_nn, -t);
            } else {
                half_potential_[i1 * n + i2] = std::exp(-v);
                kinetic_[i1 * n + i2] = std::exp(-t) * inv_nn;
            }
        }
    }
}

void ExactPropagator::step(ExactState2D& state) const {
    require_same_grid(*state.grid, *h_.grid());
    auto& psi = state.psi;
    const std::size_t total = psi.size();
    const auto& plan = plan_for(*state.grid);
    for (std::size_t i = 0; i < total; ++i) psi[i] *= half_potential_[i];
    plan.forward(psi);
    for (std::size_t i = 0; i < total; ++i) psi[i] *= kinetic_[i];
    plan.inverse(psi);
    for (std::size_t i = 0; i < total; ++i) psi[i] *= half_potential_[i];
    if (mode_ == TimeMode::imaginary) {
        state.normalize();
    } else {
        state.time += dt_;
    }
}

ExactGroundState exact_ground_state(const TwoBodyHamiltonian& h, const ExactGroundOptions& options) {
    if (!(options.tol > 0.0)) throw ParameterError("exact_ground_state: tol must be positive");
    if (options.check_every == 0) throw ParameterError("exact_ground_state: check_every must be positive");
    const GridPtr& grid = h.grid();
    const auto blob = gaussian_wave(grid, 0.0, options.initial_sigma);
    ExactGroundState out{product_state(blob, blob), 0.0, 0};
    out.state.normalize();

    const ExactPropagator prop(h, options.d_tau, TimeMode::imaginary);
    double previous = exact_energy(out.state, h);
    for (std::size_t step = 1; step <= options.max_steps; ++step) {
        prop.step(out.state);
        if (step % options.check_every != 0) continue;
        const double e = exact_energy(out.state, h);
        if (!std::isfinite(e)) throw NumericalError("exact_ground_state: energy became non-finite");
        const double per_step = std::abs(e - previous) / static_cast<double>(options.check_every);
        previous = e;
        if (per_step < options.tol) {
            out.energy = e;
            out.steps = step;
            out.state.time = 0.0;
            return out;
        }
    }
    throw ConvergenceError("exact_ground_state: no convergence within " + std::to_string(options.max_steps) +
                               " steps (last energy " + std::to_string(previous) + ")",
                           previous);
}

ExactGroundState exact_ground_state(const NuclearFrame& frame, double b, const GridPtr& grid,
                                    const ExactGroundOptions& options) {
    if (!frame.active) throw StateError("exact_ground_state: nuclear frame must be active");
    return exact_ground_state(TwoBodyHamiltonian::from_frame(grid, frame, b), options);
}

ExactEvolveReport exact_evolve(ExactState2D& state, double t_final, const TwoBodyHamiltonian& h,
                               const ExactEvolveOptions& options, const ExactObserver& observer) {
    if (!(t_final >= 0.0)) throw ParameterError("exact_evolve: t_final must be >= 0");
    if (!(options.snapshot_stride > 0.0)) throw ParameterError("exact_evolve: snapshot_stride must be positive");
    const auto n_steps = static_cast<std::size_t>(std::llround(t_final / options.dt));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.snapshot_stride / options.dt)));

    const ExactPropagator prop(h, options.dt, TimeMode::real);
    const double t0 = state.time;
    ExactEvolveReport report;
    auto monitor = [&] {
        const double edge = max_boundary(state);
        report.max_boundary_density = std::max(report.max_boundary_density, edge);
        if (edge > options.boundary_limit && !report.boundary_warning) {
            report.boundary_warning = true;
            const std::string msg = "exact_evolve: density " + std::to_string(edge) + " at the grid edge (t = " +
                                    std::to_string(state.time) + "); grid too small";
            if (options.strict_boundary) throw BoundaryError(msg);
            std::cerr << "warning: " << msg << '\n';
        }
    };

    if (observer) observer(state);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        prop.step(state);
        state.time = t0 + static_cast<double>(step) * options.dt;  // avoid accumulated rounding
        report.steps = step;
        if (step % stride == 0 || step == n_steps) {
            check_finite(state);
            monitor();
            if (observer) observer(state);
        }
    }
    return report;
}

std::vector<ExactState2D> exact_evolve(ExactState2D initial, double t_final, const TwoBodyHamiltonian& h,
                                       const ExactEvolveOptions& options) {
    std::vector<ExactState2D> series;
    exact_evolve(initial, t_final, h, options, [&](const ExactState2D& s) { series.push_back(s); });
    return series;
}

DensityMatrixCoord reduced_density_matrix(const ExactState2D& state) {
    const auto n = static_cast<Eigen::Index>(state.size());
    // owned copy: the product's rounding must not depend on the alignment of psi
    const ComplexRowMatrix p = Eigen::Map<const ComplexRowMatrix>(state.psi.data(), n, n);
    ComplexRowMatrix rho = p.conjugate() * p.transpose();
    DensityMatrixCoord out(state.grid, state.time);
    std::copy(rho.data(), rho.data() + rho.size(), out.rho.begin());
    const double tr = out.trace();
    if (!(tr > 0.0)) throw DegenerateError("reduced_density_matrix: zero trace");
    for (auto& z : out.rho) z /= tr;
    return out;
}

std::vector<double> marginal_density(const ExactState2D& state, int electron) {
    if (electron != 1 && electron != 2) throw ParameterError("marginal_density: electron must be 1 or 2");
    const std::size_t n = state.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i1 = 0; i1 < n; ++i1) {
        for (std::size_t i2 = 0; i2 < n; ++i2) {
            const double d = std::norm(state.at(i1, i2));
            out[electron == 1 ? i1 : i2] += d;
        }
    }
    const double dx = state.grid->dx();
    double total = 0.0;
    for (double v : out) total += v;
    if (!(total > 0.0)) throw DegenerateError("marginal_density: zero state");
    const double scale = 1.0 / (total * dx);
    for (auto& v : out) v *= scale;
    return out;
}

std::array<double, 2> VelocityField2D::at(double x1, double x2, bool* flagged) const {
    const std::size_t n = grid->size();
    const double dx = grid->dx();
    const double L = grid->length();
    auto locate = [&](double x, std::size_t& i0, double& f) {
        double s = std::fmod(x - grid->x_min(), L);
        if (s < 0) s += L;
        const double u = s / dx;
        const double fl = std::floor(u);
        i0 = static_cast<std::size_t>(fl) % n;
        f = u - fl;
    };
    std::size_t a0, b0;
    double fa, fb;
    locate(x1, a0, fa);
    locate(x2, b0, fb);
    const std::size_t a1 = (a0 + 1) % n;
    const std::size_t b1 = (b0 + 1) % n;
    auto lerp2 = [&](const std::vector<double>& f) {
        return (1 - fa) * (1 - fb) * f[a0 * n + b0] + fa * (1 - fb) * f[a1 * n + b0] +
               (1 - fa) * fb * f[a0 * n + b1] + fa * fb * f[a1 * n + b1];
    };
    if (flagged) {
        const std::size_t na = fa < 0.5 ? a0 : a1;
        const std::size_t nb = fb < 0.5 ? b0 : b1;
        *flagged = node[na * n + nb] != 0;
    }
    return {lerp2(v1), lerp2(v2)};
}

VelocityField2D velocity_field(const ExactState2D& state, double max_speed) {
    const std::size_t n = state.size();
    const auto k = state.grid->k_values();
    const auto& plan = plan_for(*state.grid);
    const double inv_nn = 1.0 / (static_cast<double>(n) * static_cast<double>(n));

    std::vector<Complex> spectrum = state.psi;
    plan.forward(spectrum);
    // The Nyquist mode has no well-defined derivative on a periodic grid.
    auto derivative = [&](bool first_axis) {
        std::vector<Complex> d(spectrum.size());
        for (std::size_t i1 = 0; i1 < n; ++i1) {
            for (std::size_t i2 = 0; i2 < n; ++i2) {
                const std::size_t m = first_axis ? i1 : i2;
                const double kk = (m == n / 2) ? 0.0 : k[m];
                d[i1 * n + i2] = Complex(0.0, kk * inv_nn) * spectrum[i1 * n + i2];
            }
        }
        plan.inverse(d);
        return d;
    };
    const auto d1 = derivative(true);
    const auto d2 = derivative(false);

    double max_rho = 0.0;
    for (const auto& c : state.psi) max_rho = std::max(max_rho, std::norm(c));

    VelocityField2D f{state.grid, std::vector<double>(n * n), std::vector<double>(n * n),
                      std::vector<unsigned char>(n * n, 0), state.time};
    for (std::size_t i = 0; i < n * n; ++i) {
        const Complex psi = state.psi[i];
        const double rho = std::norm(psi);
        if (rho == 0.0) {
            f.node[i] = 1;
            continue;
        }
        double u1 = std::imag(d1[i] * std::conj(psi)) / rho;
        double u2 = std::imag(d2[i] * std::conj(psi)) / rho;
        if (rho < kNodeThreshold * max_rho) {
            f.node[i] = 1;
            u1 = std::clamp(u1, -max_speed, max_speed);
            u2 = std::clamp(u2, -max_speed, max_speed);
        }
        f.v1[i] = u1;
        f.v2[i] = u2;
    }
    return f;
}

std::vector<ConfigTrajectory> exact_trajectories(std::span<const ExactState2D> series,
                                                 std::span<const std::array<double, 2>> starts) {
    std::vector<ConfigTrajectory> out(starts.size());
    if (series.empty()) return out;
    const GridPtr& grid = series.front().grid;
    for (const auto& s : series) require_same_grid(*grid, *s.grid);
    for (const auto& p : starts) {
        for (double x : p) {
            if (!(x > grid->x_min() && x < grid->x_max())) throw ParameterError("exact_trajectories: start outside grid");
        }
    }
    for (std::size_t j = 0; j < starts.size(); ++j) {
        out[j].times.push_back(series.front().time);
        out[j].points.push_back(starts[j]);
    }
    if (series.size() == 1) return out;

    const double spacing = series[1].time - series[0].time;
    const double max_speed = spacing > 0.0 ? grid->dx() / spacing : std::numeric_limits<double>::infinity();
    VelocityField2D current = velocity_field(series[0], max_speed);
    for (std::size_t s = 1; s < series.size(); ++s) {
        VelocityField2D next = velocity_field(series[s], max_speed);
        const double dt = series[s].time - series[s - 1].time;
        for (std::size_t j = 0; j < starts.size(); ++j) {
            auto& traj = out[j];
            const auto p = traj.points.back();
            bool f0 = false, fa = false, fb = false;
            const auto k1 = current.at(p[0], p[1], &f0);
            const double m1 = p[0] + 0.5 * dt * k1[0];
            const double m2 = p[1] + 0.5 * dt * k1[1];
            const auto va = current.at(m1, m2, &fa);
            const auto vb = next.at(m1, m2, &fb);
            const double w1 = 0.5 * (va[0] + vb[0]);
            const double w2 = 0.5 * (va[1] + vb[1]);
            if (f0 || fa || fb) ++traj.clamped_steps;
            traj.times.push_back(series[s].time);
            traj.points.push_back({p[0] + dt * w1, p[1] + dt * w2});
        }
        current = std::move(next);
    }
    return out;
}

}  // namespace tdqmc
