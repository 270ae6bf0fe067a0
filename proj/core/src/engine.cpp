#include "tdqmc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <string>

#include "tdqmc/error.hpp"
#include "tdqmc/rng.hpp"

namespace tdqmc {
namespace {

using Index = std::ptrdiff_t;

/// Exceptions may not leave an OpenMP region: the first one is kept and
/// reported as a NumericalError once the loop has finished.
class LoopErrors {
public:
    template <class F>
    void guard(F&& body) noexcept {
        try {
            body();
        } catch (const std::exception& e) {
#pragma omp critical(tdqmc_loop_errors)
            if (message_.empty()) message_ = e.what();
        }
    }
    void check(const char* where) const {
        if (!message_.empty()) throw NumericalError(std::string(where) + ": " + message_);
    }

private:
    std::string message_;
};

std::size_t walker_index(Index idx, std::size_t m, bool reverse) {
    const auto u = static_cast<std::size_t>(idx);
    return reverse ? m - 1 - u : u;
}

/// One-body potential broadcast to every row plus the effective e-e potential
/// from each partner electron's frozen walkers.
void build_potentials(const EnsembleState& s, std::size_t electron, const EngineOptions& options,
                      RowMatrix& out) {
    const auto m = static_cast<Eigen::Index>(s.m_walkers);
    const auto n = static_cast<Eigen::Index>(s.grid->size());
    out.resize(m, n);
    const Eigen::Map<const Eigen::RowVectorXd> v1(s.one_body.values.data(), n);
    out.rowwise() = v1;
    for (std::size_t j = 0; j < s.n_electrons; ++j) {
        if (j == electron) continue;
        accumulate_effective_potentials(*s.grid, s.walkers[j], s.sigmas[j], s.coupling.b, s.coupling.mode,
                                        options.potential, out);
    }
}

void update_sigmas(EnsembleState& s) {
    for (std::size_t i = 0; i < s.n_electrons; ++i) {
        s.sigmas[i] = sigma_update(s.walkers[i], s.alpha(i), s.coupling.sigma_floor);
    }
}

void redraw_walkers(EnsembleState& s, const EngineOptions& options) {
    const std::size_t m = s.m_walkers;
    const std::size_t n = s.grid->size();
    for (std::size_t i = 0; i < s.n_electrons; ++i) {
        auto& waves = s.waves[i];
        auto& walkers = s.walkers[i];
        LoopErrors errors;
#pragma omp parallel
        {
            std::vector<double> dens(n);
#pragma omp for schedule(static)
            for (Index idx = 0; idx < static_cast<Index>(m); ++idx) {
                errors.guard([&] {
                    const std::size_t k = walker_index(idx, m, options.reverse_order);
                    density_into(waves.wave(k), dens);
                    RandomStream rng(s.rng_seed, StreamId{s.epoch, static_cast<std::uint32_t>(i),
                                                          static_cast<std::uint32_t>(k)});
                    walkers[k] = InverseCdf(dens, *s.grid)(rng.uniform());
                });
            }
        }
        errors.check("walker redraw");
    }
}

/// Wave value and derivative at an off-grid point from the cubic through the
/// four nearest nodes. False outside the interpolation range.
bool local_cubic(std::span<const Complex> psi, const Grid1D& g, double x, Complex& value, Complex& slope) {
    const double t = (x - g.x_min()) / g.dx();
    const double fl = std::floor(t);
    if (!(fl >= 1.0) || fl + 2.0 >= static_cast<double>(g.size())) return false;
    const auto i = static_cast<std::size_t>(fl);
    const double u = t - fl;
    const double w[4] = {-u * (u - 1) * (u - 2) / 6, (u + 1) * (u - 1) * (u - 2) / 2, -(u + 1) * u * (u - 2) / 2,
                         (u + 1) * u * (u - 1) / 6};
    const double dw[4] = {-(3 * u * u - 6 * u + 2) / 6, (3 * u * u - 4 * u - 1) / 2, -(3 * u * u - 2 * u - 2) / 2,
                          (3 * u * u - 1) / 6};
    value = 0.0;
    slope = 0.0;
    for (std::size_t q = 0; q < 4; ++q) {
        value += w[q] * psi[i - 1 + q];
        slope += dw[q] * psi[i - 1 + q];
    }
    slope /= g.dx();
    return true;
}

struct LocalDensity {
    double density = 0.0;
    double drift = 0.0;  // d/dx ln|phi|
    bool inside = false;
};

LocalDensity local_density(std::span<const Complex> psi, const Grid1D& g, double x) {
    Complex v, d;
    LocalDensity out;
    if (!local_cubic(psi, g, x, v, d)) return out;
    out.density = std::norm(v);
    out.inside = out.density > 0.0;
    if (out.inside) out.drift = std::real(std::conj(v) * d) / out.density;
    return out;
}

void move_walkers(EnsembleState& s, double d_tau, const EngineOptions& options) {
    const std::size_t m = s.m_walkers;
    for (std::size_t i = 0; i < s.n_electrons; ++i) {
        auto& waves = s.waves[i];
        auto& walkers = s.walkers[i];
        LoopErrors errors;
#pragma omp parallel for schedule(static)
        for (Index idx = 0; idx < static_cast<Index>(m); ++idx) {
            errors.guard([&] {
                const std::size_t k = walker_index(idx, m, options.reverse_order);
                RandomStream rng(s.rng_seed, StreamId{s.epoch, static_cast<std::uint32_t>(i),
                                                      static_cast<std::uint32_t>(k)});
                walkers[k] = langevin_move(waves.wave(k), *s.grid, walkers[k], d_tau, rng);
            });
        }
        errors.check("walker move");
    }
}

void propagate_waves(EnsembleState& s, const SplitStepPropagator& prop, const EngineOptions& options,
                     std::vector<RowMatrix>& potentials) {
    const std::size_t m = s.m_walkers;
    const std::size_t n = s.grid->size();
    // every potential is built before any wave moves: walkers are frozen for the step
    for (std::size_t i = 0; i < s.n_electrons; ++i) build_potentials(s, i, options, potentials[i]);
    for (std::size_t i = 0; i < s.n_electrons; ++i) {
        auto& waves = s.waves[i];
        const RowMatrix& pot = potentials[i];
        LoopErrors errors;
#pragma omp parallel for schedule(static)
        for (Index idx = 0; idx < static_cast<Index>(m); ++idx) {
            errors.guard([&] {
                const std::size_t k = walker_index(idx, m, options.reverse_order);
                prop.step(waves.wave(k), std::span<const double>(pot.row(static_cast<Eigen::Index>(k)).data(), n));
            });
        }
        errors.check("guide wave step");
    }
}

double norm_drift(const EnsembleState& s) {
    const double dx = s.grid->dx();
    double worst = 0.0;
    for (const auto& w : s.waves) {
        for (std::size_t k = 0; k < w.count(); ++k) {
            const double nrm = std::sqrt(norm_squared(w.wave(k), dx));
            if (!std::isfinite(nrm)) throw NumericalError("guide wave became non-finite at t = " + std::to_string(s.time));
            worst = std::max(worst, std::abs(nrm - 1.0));
        }
    }
    return worst;
}

}  // namespace

double langevin_move(std::span<const Complex> psi, const Grid1D& grid, double x, double d_tau, RandomStream& rng) {
    if (psi.size() != grid.size()) throw ShapeError("langevin_move: wave length does not match grid");
    if (!(d_tau > 0.0)) throw ParameterError("langevin_move: d_tau must be positive");
    const auto here = local_density(psi, grid, x);
    if (!here.inside || !std::isfinite(here.drift)) {
        std::vector<double> dens(grid.size());
        density_into(psi, dens);
        return InverseCdf(dens, grid)(rng.uniform());
    }
    const double proposal = x + d_tau * here.drift + std::sqrt(d_tau) * rng.normal();
    const double u = rng.uniform();
    const auto there = local_density(psi, grid, proposal);
    if (!there.inside || !std::isfinite(there.drift)) return x;
    const double fwd = proposal - x - d_tau * here.drift;
    const double back = x - proposal - d_tau * there.drift;
    const double log_ratio = std::log(there.density / here.density) + (fwd * fwd - back * back) / (2.0 * d_tau);
    return std::log(u) < log_ratio ? proposal : x;
}

void EngineSetup::validate() const {
    if (!grid) throw ConfigError("engine: grid missing");
    if (n_electrons < 1) throw ConfigError("engine: need at least one electron");
    if (m_walkers < 1) throw ConfigError("engine: m_walkers must be positive");
    if (!(initial_width > 0.0)) throw ConfigError("engine: initial_width must be positive");
    coupling.validate();
    if (coupling.alpha.size() != 1 && coupling.alpha.size() != n_electrons) {
        throw ConfigError("engine: alpha must have one entry or one per electron");
    }
    if (one_body_override) require_same_grid(*grid, *one_body_override->grid);
}

double EnsembleState::alpha(std::size_t electron) const {
    return coupling.alpha.size() == 1 ? coupling.alpha.front() : coupling.alpha.at(electron);
}

EnsembleState init_ensemble(const EngineSetup& setup) {
    setup.validate();
    EnsembleState s;
    s.grid = setup.grid;
    s.n_electrons = setup.n_electrons;
    s.m_walkers = setup.m_walkers;
    s.rng_seed = setup.seed;
    s.coupling = setup.coupling;
    s.frame = setup.frame;
    s.one_body = setup.one_body_override ? *setup.one_body_override : v_en_grid(setup.grid, setup.frame);

    const auto start = gaussian_wave(setup.grid, setup.initial_center, setup.initial_width);
    const auto dens = density(start);
    const InverseCdf sampler(dens, *setup.grid);
    for (std::size_t i = 0; i < s.n_electrons; ++i) {
        WaveEnsemble w(setup.grid, setup.m_walkers);
        std::vector<double> x(setup.m_walkers);
        for (std::size_t k = 0; k < setup.m_walkers; ++k) {
            w.set(k, start.amplitudes);
            RandomStream rng(s.rng_seed, StreamId{0, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)});
            x[k] = sampler(rng.uniform());
        }
        s.waves.push_back(std::move(w));
        s.walkers.push_back(std::move(x));
    }
    s.sigmas.assign(s.n_electrons, 0.0);
    update_sigmas(s);
    s.epoch = 1;
    return s;
}

EnergyEstimate estimate_energy(const EnsembleState& state) {
    const std::size_t m = state.m_walkers;
    const Grid1D& g = *state.grid;
    std::vector<double> per_walker_one(m, 0.0);
    for (std::size_t i = 0; i < state.n_electrons; ++i) {
#pragma omp parallel for schedule(static)
        for (Index k = 0; k < static_cast<Index>(m); ++k) {
            const auto w = state.waves[i].wave(static_cast<std::size_t>(k));
            per_walker_one[static_cast<std::size_t>(k)] +=
                kinetic_energy(w, g) + potential_energy(w, state.one_body.values, g.dx());
        }
    }
    std::vector<double> per_walker_ee(m, 0.0);
    for (std::size_t i = 0; i < state.n_electrons; ++i) {
        for (std::size_t j = i + 1; j < state.n_electrons; ++j) {
            for (std::size_t k = 0; k < m; ++k) {
                per_walker_ee[k] += v_ee(state.walkers[i][k] - state.walkers[j][k], state.coupling.b);
            }
        }
    }
    EnergyEstimate e;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        e.kinetic_plus_en += per_walker_one[k];
        e.ee += per_walker_ee[k];
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    e.kinetic_plus_en *= inv_m;
    e.ee *= inv_m;
    e.total = e.kinetic_plus_en + e.ee;
    for (std::size_t k = 0; k < m; ++k) {
        const double d = per_walker_one[k] + per_walker_ee[k] - e.total;
        sum_sq += d * d;
    }
    e.std_error = m > 1 ? std::sqrt(sum_sq / static_cast<double>(m - 1) * inv_m) : 0.0;
    return e;
}

namespace {

std::span<const EnergyTracePoint> tail(std::span<const EnergyTracePoint> trace, double fraction) {
    if (trace.empty()) throw DegenerateError("energy trace is empty");
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(trace.size()))));
    return trace.subspan(trace.size() - std::min(count, trace.size()));
}

}  // namespace

EnergyEstimate tail_average(std::span<const EnergyTracePoint> trace, double fraction) {
    const auto t = tail(trace, fraction);
    EnergyEstimate out;
    for (const auto& p : t) {
        out.total += p.energy.total;
        out.kinetic_plus_en += p.energy.kinetic_plus_en;
        out.ee += p.energy.ee;
    }
    const double inv = 1.0 / static_cast<double>(t.size());
    out.total *= inv;
    out.kinetic_plus_en *= inv;
    out.ee *= inv;
    if (t.size() > 1) {
        double ss = 0.0;
        for (const auto& p : t) ss += (p.energy.total - out.total) * (p.energy.total - out.total);
        out.std_error = std::sqrt(ss / static_cast<double>(t.size() - 1) * inv);
    } else {
        out.std_error = t.front().energy.std_error;
    }
    return out;
}

double tail_slope(std::span<const EnergyTracePoint> trace, double fraction) {
    const auto t = tail(trace, fraction);
    if (t.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : t) {
        const auto x = static_cast<double>(p.step);
        sx += x;
        sy += p.energy.total;
        sxx += x * x;
        sxy += x * p.energy.total;
    }
    const auto n = static_cast<double>(t.size());
    const double denom = n * sxx - sx * sx;
    return denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

std::vector<EnergyTracePoint> relax_ground_state(EnsembleState& state, std::size_t n_steps, double d_tau,
                                                 const EngineOptions& options) {
    if (!state.frame.active) throw StateError("relax_ground_state: nuclear frame has been released");
    const SplitStepPropagator prop(state.grid, d_tau, TimeMode::imaginary);
    std::vector<RowMatrix> potentials(state.n_electrons);
    std::vector<EnergyTracePoint> trace;
    const std::size_t every = std::max<std::size_t>(1, options.energy_every);

    for (std::size_t step = 1; step <= n_steps; ++step) {
        propagate_waves(state, prop, options, potentials);
        if (options.imaginary_walkers == WalkerMove::redraw) {
            redraw_walkers(state, options);
        } else {
            move_walkers(state, d_tau, options);
        }
        update_sigmas(state);
        ++state.epoch;

        if (step % every == 0 || step == n_steps) {
            const auto e = estimate_energy(state);
            if (!std::isfinite(e.total)) throw NumericalError("relax_ground_state: energy became non-finite");
            trace.push_back({step, static_cast<double>(step) * d_tau, e});
        }
        if (options.progress && step % 100 == 0) {
            std::fprintf(stderr, "relax: step %zu/%zu  E = %.6f\n", step, n_steps,
                         trace.empty() ? 0.0 : trace.back().energy.total);
        }
    }
    state.stats.max_norm_drift = std::max(state.stats.max_norm_drift, norm_drift(state));
    return trace;
}

std::vector<AlphaPoint> scan_alpha(const EngineSetup& setup, std::span<const double> alphas,
                                   std::size_t relax_steps, double d_tau, const EngineOptions& options) {
    std::vector<AlphaPoint> out;
    for (double a : alphas) {
        if (!(a > 0.0)) throw ParameterError("scan_alpha: alpha values must be positive");
        EngineSetup s = setup;
        s.coupling.alpha.assign(1, a);
        EnsembleState state = init_ensemble(s);
        const auto trace = relax_ground_state(state, relax_steps, d_tau, options);
        out.push_back({a, tail_average(trace)});
        if (options.progress) std::fprintf(stderr, "scan-alpha: alpha = %g  E = %.6f\n", a, out.back().energy.total);
    }
    return out;
}

void release(EnsembleState& state) {
    if (!state.frame.active) throw StateError("release: nuclear frame already released");
    state.frame.active = false;
    state.one_body = PotentialGrid(state.grid);
    state.time = 0.0;
}

void evolve_real_time(EnsembleState& state, double t_final, double dt, double snapshot_stride,
                      const SnapshotSink& sink, const EngineOptions& options) {
    if (!(dt > 0.0)) throw ParameterError("evolve_real_time: dt must be positive");
    if (!(t_final >= 0.0)) throw ParameterError("evolve_real_time: t_final must be >= 0");
    if (!(snapshot_stride > 0.0)) throw ParameterError("evolve_real_time: snapshot_stride must be positive");
    const auto n_steps = static_cast<std::size_t>(std::llround(t_final / dt));
    const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(snapshot_stride / dt)));
    const SplitStepPropagator prop(state.grid, dt, TimeMode::real);
    std::vector<RowMatrix> potentials(state.n_electrons);
    const std::size_t m = state.m_walkers;
    const double max_speed = state.grid->dx() / dt;
    const double t0 = state.time;

    state.stats.max_norm_drift = std::max(state.stats.max_norm_drift, norm_drift(state));
    if (sink) sink(state);

    for (std::size_t step = 1; step <= n_steps; ++step) {
        propagate_waves(state, prop, options, potentials);

        std::size_t clamps = 0;
        bool bad = false;
        for (std::size_t i = 0; i < state.n_electrons; ++i) {
            auto& waves = state.waves[i];
            auto& walkers = state.walkers[i];
#pragma omp parallel for schedule(static) reduction(+ : clamps) reduction(|| : bad)
            for (Index idx = 0; idx < static_cast<Index>(m); ++idx) {
                const std::size_t k = walker_index(idx, m, options.reverse_order);
                // walker k reads only its own, already advanced, guide wave
                const SpectralEvaluator own(waves.wave(k), *state.grid);
                const double x = walkers[k];
                const auto v1 = bohm_velocity(own, x, max_speed);
                const auto v2 = bohm_velocity(own, x + 0.5 * dt * v1.velocity, max_speed);
                const double next = x + dt * v2.velocity;
                if (v1.clamped || v2.clamped) ++clamps;
                if (!std::isfinite(next)) bad = true;
                walkers[k] = next;
            }
        }
        if (bad) throw NumericalError("evolve_real_time: walker position became non-finite");
        state.stats.clamp_events += clamps;
        state.stats.walker_steps += m * state.n_electrons;

        update_sigmas(state);
        ++state.epoch;
        state.time = t0 + static_cast<double>(step) * dt;

        const bool snapshot = step % stride == 0 || step == n_steps;
        if (snapshot) state.stats.max_norm_drift = std::max(state.stats.max_norm_drift, norm_drift(state));
        if (options.progress && step % 100 == 0) {
            std::fprintf(stderr, "evolve: step %zu/%zu  t = %.3f\n", step, n_steps, state.time);
        }
        if (snapshot && sink) sink(state);
    }

    const double fraction = state.stats.walker_steps == 0
                                ? 0.0
                                : static_cast<double>(state.stats.clamp_events) /
                                      static_cast<double>(state.stats.walker_steps);
    if (fraction > options.clamp_warning_fraction && !state.stats.clamp_warning) {
        state.stats.clamp_warning = true;
        std::fprintf(stderr, "warning: %.2f%% of walker steps hit a node and were speed-limited\n", 100.0 * fraction);
    }
}

EnsembleSnapshot make_snapshot(const EnsembleState& state, bool include_waves) {
    EnsembleSnapshot s;
    s.time = state.time;
    s.walkers = state.walkers;
    s.sigmas = state.sigmas;
    for (std::size_t i = 0; i < state.n_electrons; ++i) s.densities.push_back(state.density(i));
    if (include_waves) s.waves = state.waves;
    return s;
}

}  // namespace tdqmc
