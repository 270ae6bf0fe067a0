#include "tdqmc/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "tdqmc/error.hpp"

namespace tdqmc {
namespace {

using json = nlohmann::json;

std::string file_tag(CouplingMode mode) {
    switch (mode) {
        case CouplingMode::optimized: return "tdqmc";
        case CouplingMode::ultra_correlated: return "ultra";
        case CouplingMode::mean_field: return "hartree";
    }
    return "tdqmc";
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Collects outputs and stage names; writes the manifest on every exit path.
class Run {
public:
    Run(const ExperimentConfig* config, fs::path dir, const PipelineOptions& options, bool fresh_dir = true)
        : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
        manifest_.version = library_version();
        manifest_.started_at = utc_now();
        if (config) manifest_.config_json = to_json(*config);
        if (fresh_dir) prepare_output_dir(dir_, options.force);
    }

    const fs::path& dir() const { return dir_; }
    void stage(const std::string& name) { stage_ = name; }
    StageHook hook() {
        return [this](const std::string& s) { stage(s); };
    }
    void add(const fs::path& relative) { files_.push_back(relative); }
    void add(const std::vector<fs::path>& paths) {
        for (const auto& p : paths) files_.push_back(fs::relative(p, dir_));
    }
    RunManifest& manifest() { return manifest_; }

    template <class F>
    RunManifest execute(F&& body) {
        try {
            body(*this);
        } catch (const std::exception& e) {
            manifest_.status = "failed";
            manifest_.failed_stage = stage_.empty() ? "setup" : stage_;
            manifest_.error = e.what();
        }
        manifest_.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_manifest(dir_, manifest_, files_);
        return manifest_;
    }

private:
    fs::path dir_;
    RunManifest manifest_;
    std::vector<fs::path> files_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
};

void write_coherence(const fs::path& path, const CoherenceTrace& c) {
    const std::vector<std::string> header{"t", "raw", "normalized", "degree", "degree_normalized"};
    const std::vector<std::vector<double>> cols{c.times, c.raw, c.normalized, c.degree, c.degree_normalized};
    write_table_csv(path, header, cols);
}

void write_energy_trace(const fs::path& path, const std::vector<EnergyTracePoint>& trace) {
    std::vector<std::vector<double>> cols(6);
    for (const auto& p : trace) {
        cols[0].push_back(static_cast<double>(p.step));
        cols[1].push_back(p.tau);
        cols[2].push_back(p.energy.total);
        cols[3].push_back(p.energy.kinetic_plus_en);
        cols[4].push_back(p.energy.ee);
        cols[5].push_back(p.energy.std_error);
    }
    const std::vector<std::string> header{"step", "tau", "total", "kinetic_plus_en", "ee", "std_error"};
    write_table_csv(path, header, cols);
}

void write_main_tdqmc(Run& run, const TdqmcRun& r) {
    const auto& dir = run.dir();
    write_energy_trace(dir / "energy_trace.csv", r.energy_trace);
    run.add("energy_trace.csv");
    write_density_csv(dir / "density_tdqmc.csv", r.times, *r.grid, r.densities);
    run.add("density_tdqmc.csv");
    write_density_csv(dir / "density_kde.csv", r.times, *r.grid, r.kde);
    run.add("density_kde.csv");
    write_coherence(dir / "coherence_tdqmc.csv", r.coherence);
    run.add("coherence_tdqmc.csv");
    run.add(write_density_matrix(dir / "rho_ground", r.rho_ground));
    if (!r.rho_final.rho.empty()) run.add(write_density_matrix(dir / "rho_final", r.rho_final));
    const std::vector<std::string> header{"electron1", "electron2"};
    write_table_csv(dir / "walkers_final.csv", header, r.final_walkers);
    run.add("walkers_final.csv");
}

void write_compare(Run& run, const TdqmcRun& r) {
    const std::string tag = file_tag(r.mode);
    write_density_csv(run.dir() / ("density_" + tag + ".csv"), r.times, *r.grid, r.densities);
    run.add("density_" + tag + ".csv");
    write_coherence(run.dir() / ("coherence_" + tag + ".csv"), r.coherence);
    run.add("coherence_" + tag + ".csv");
}

void write_exact(Run& run, const ExactRun& r) {
    const auto& dir = run.dir();
    write_density_csv(dir / "density_exact.csv", r.times, *r.grid, r.marginals);
    run.add("density_exact.csv");
    if (r.times.size() > 1) {
        write_coherence(dir / "coherence_exact.csv", r.coherence);
        run.add("coherence_exact.csv");
        const std::vector<std::string> header{"t", "energy"};
        const std::vector<std::vector<double>> cols{r.times, r.energies};
        write_table_csv(dir / "exact_energy.csv", header, cols);
        run.add("exact_energy.csv");
    }
    run.add(write_density_matrix(dir / "rho_exact_ground", r.rho_ground));
    if (!r.rho_final.rho.empty()) run.add(write_density_matrix(dir / "rho_exact_final", r.rho_final));
}

void write_summary(Run& run, const json& summary) {
    std::ofstream out(run.dir() / "summary.json");
    if (!out) throw IoError("cannot write summary.json");
    out << summary.dump(2) << '\n';
    run.add("summary.json");
}

json tdqmc_summary(const TdqmcRun& r) {
    return {{"mode", std::string(to_string(r.mode))},
            {"ground_energy", r.ground_energy.total},
            {"ground_energy_std_error", r.ground_energy.std_error},
            {"ground_purity", r.rho_ground.purity()},
            {"final_purity", r.rho_final.rho.empty() ? r.rho_ground.purity() : r.rho_final.purity()},
            {"max_norm_drift", r.max_norm_drift},
            {"clamp_events", r.clamp_events},
            {"walker_steps", r.walker_steps}};
}

json exact_summary(const ExactRun& r) {
    return {{"ground_energy", r.ground_energy},
            {"relax_steps", r.relax_steps},
            {"ground_purity", r.rho_ground.purity()},
            {"max_norm_drift", r.max_norm_drift},
            {"max_energy_drift", r.max_energy_drift},
            {"max_exchange_asymmetry", r.max_exchange_asymmetry},
            {"max_boundary_density", r.report.max_boundary_density}};
}

void write_alpha_scan(Run& run, const std::vector<AlphaPoint>& points) {
    std::vector<std::vector<double>> cols(5);
    for (const auto& p : points) {
        cols[0].push_back(p.alpha);
        cols[1].push_back(p.energy.total);
        cols[2].push_back(p.energy.std_error);
        cols[3].push_back(p.energy.kinetic_plus_en);
        cols[4].push_back(p.energy.ee);
    }
    const std::vector<std::string> header{"alpha", "total", "std_error", "kinetic_plus_en", "ee"};
    write_table_csv(run.dir() / "alpha_scan.csv", header, cols);
    run.add("alpha_scan.csv");
}

std::vector<AlphaPoint> scan(const ExperimentConfig& config, const PipelineOptions& options) {
    EngineOptions eo;
    eo.progress = options.progress;
    eo.potential.kernel_cutoff = config.kernel_cutoff;
    eo.imaginary_walkers = config.walker_move;
    const auto& alphas = config.scan_alphas.empty() ? default_scan_alphas() : config.scan_alphas;
    return scan_alpha(make_engine_setup(config), alphas, config.relax_steps, config.d_tau, eo);
}

GridPtr grid_from_positions(const std::vector<double>& x) {
    if (x.size() < 2) throw IoError("density table has fewer than two rows");
    const double dx = x[1] - x[0];
    return make_grid(x.front(), x.front() + dx * static_cast<double>(x.size()), x.size());
}

const std::vector<double>* column_at(const DensityTable& t, double time) {
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        if (std::abs(t.times[i] - time) < 1e-6) return &t.columns[i];
    }
    return nullptr;
}

/// Writes visibility.csv and (with an exact reference) deviation.csv into the run directory.
void analyze_into(Run& run, const ExperimentConfig& config, bool force) {
    const fs::path& dir = run.dir();
    for (const char* name : {"deviation.csv", "visibility.csv"}) {
        if (fs::exists(dir / name) && !force) {
            throw IoError(std::string("'") + name + "' already exists (use --force to overwrite)");
        }
    }
    if (!fs::exists(dir / "density_tdqmc.csv")) throw IoError("no density_tdqmc.csv in '" + dir.string() + "'");
    const DensityTable tdqmc = read_density_csv(dir / "density_tdqmc.csv");
    const GridPtr grid = grid_from_positions(tdqmc.x);

    std::vector<std::pair<std::string, DensityTable>> series;
    series.emplace_back("tdqmc", tdqmc);
    if (fs::exists(dir / "density_kde.csv")) series.emplace_back("kde", read_density_csv(dir / "density_kde.csv"));
    for (const char* tag : {"ultra", "hartree"}) {
        const auto path = dir / (std::string("density_") + tag + ".csv");
        if (fs::exists(path)) series.emplace_back(tag, read_density_csv(path));
    }

    std::optional<DensityTable> exact;
    GridPtr exact_grid;
    if (fs::exists(dir / "density_exact.csv")) {
        exact = read_density_csv(dir / "density_exact.csv");
        exact_grid = grid_from_positions(exact->x);
    }

    // smoothing at the KDE bandwidth of the final walker cloud
    double smoothing = 0.0;
    if (fs::exists(dir / "walkers_final.csv")) {
        const Table w = read_table_csv(dir / "walkers_final.csv");
        if (!w.columns.empty() && w.columns[0].size() >= 2) smoothing = silverman_bandwidth(w.columns[0]);
    }
    VisibilityOptions vis;
    vis.window = config.visibility_window;
    vis.smoothing = smoothing;
    VisibilityOptions vis_exact = vis;
    vis_exact.smoothing = 0.0;

    std::vector<std::string> vheader{"t"};
    std::vector<std::vector<double>> vcols{tdqmc.times};
    for (const auto& [tag, table] : series) {
        vheader.push_back(tag);
        std::vector<double> v;
        for (const auto& col : table.columns) v.push_back(fringe_visibility(col, *grid, vis));
        vcols.push_back(std::move(v));
    }
    if (exact) {
        vheader.emplace_back("exact");
        std::vector<double> v;
        for (double t : tdqmc.times) {
            const auto* col = column_at(*exact, t);
            v.push_back(col ? fringe_visibility(*col, *exact_grid, vis_exact) : std::nan(""));
        }
        vcols.push_back(std::move(v));
    }
    write_table_csv(dir / "visibility.csv", vheader, vcols);
    run.add("visibility.csv");

    if (exact) {
        std::vector<std::string> dheader{"t"};
        std::vector<std::vector<double>> dcols{tdqmc.times};
        for (const auto& [tag, table] : series) {
            dheader.push_back("l1_" + tag);
            std::vector<double> d;
            for (std::size_t i = 0; i < table.times.size(); ++i) {
                const auto* col = column_at(*exact, table.times[i]);
                if (!col) {
                    d.push_back(std::nan(""));
                    continue;
                }
                const auto ref = resample_density(*col, *exact_grid, *grid);
                d.push_back(l1_deviation(table.columns[i], ref, *grid));
            }
            d.resize(tdqmc.times.size(), std::nan(""));
            dcols.push_back(std::move(d));
        }
        write_table_csv(dir / "deviation.csv", dheader, dcols);
        run.add("deviation.csv");
    }
}

}  // namespace

const std::vector<double>& default_scan_alphas() {
    static const std::vector<double> a{0.2, 0.4, 0.6, 0.8, 1.0, 1.4};
    return a;
}

TdqmcRun run_tdqmc(const ExperimentConfig& config, const TdqmcRunOptions& options) {
    auto stage = [&](const char* s) {
        if (options.on_stage) options.on_stage(s);
    };
    config.validate();
    stage("ground");
    EngineSetup setup = make_engine_setup(config);
    if (options.mode) setup.coupling.mode = *options.mode;
    EngineOptions eo;
    eo.progress = options.progress;
    eo.potential.kernel_cutoff = config.kernel_cutoff;
    eo.imaginary_walkers = config.walker_move;

    TdqmcRun r;
    r.grid = setup.grid;
    r.mode = setup.coupling.mode;
    EnsembleState state = init_ensemble(setup);
    r.energy_trace = relax_ground_state(state, config.relax_steps, config.d_tau, eo);
    r.ground_energy = tail_average(r.energy_trace);
    r.rho_ground = build_density_matrix(state.waves[0], 0.0);

    auto record = [&](const EnsembleState& s) {
        r.times.push_back(s.time);
        r.densities.push_back(s.density(0));
        if (s.n_electrons > 1) r.densities_e2.push_back(s.density(1));
        const double h = silverman_bandwidth(s.walkers[0]);
        r.bandwidth.push_back(h);
        r.kde.push_back(kde_density(s.walkers[0], *s.grid, h));
        r.walker_mean.push_back(sample_mean(s.walkers[0]));
        r.coherence.push(s.time, coherence(s.waves[0]));
    };

    if (options.evolve) {
        stage("release");
        release(state);
        stage("evolve");
        evolve_real_time(state, config.t_final, config.dt_real, config.snapshot_stride, record, eo);
        r.rho_final = build_density_matrix(state.waves[0], state.time);
    } else {
        record(state);
    }
    r.final_walkers = state.walkers;
    r.max_norm_drift = state.stats.max_norm_drift;
    r.clamp_events = state.stats.clamp_events;
    r.walker_steps = state.stats.walker_steps;
    if (options.keep_final_state) r.final_state = std::move(state);
    return r;
}

ExactRun run_exact(const ExperimentConfig& config, const ExactRunOptions& options) {
    auto stage = [&](const char* s) {
        if (options.on_stage) options.on_stage(s);
    };
    config.validate();
    stage("exact-ground");
    ExactRun r;
    r.grid = make_exact_grid(config);
    const NuclearFrame frame = make_frame(config);
    const auto bound = TwoBodyHamiltonian::from_frame(r.grid, frame, config.b);
    auto gs = exact_ground_state(bound, make_exact_ground_options(config));
    r.ground_energy = gs.energy;
    r.relax_steps = gs.steps;
    r.rho_ground = reduced_density_matrix(gs.state);
    if (options.progress) {
        std::fprintf(stderr, "exact: ground state E = %.8f after %zu steps\n", gs.energy, gs.steps);
    }

    NuclearFrame released = frame;
    released.active = false;
    const auto free_h = TwoBodyHamiltonian::from_frame(r.grid, released, config.b);
    const double e0 = exact_energy(gs.state, free_h);

    auto record = [&](const ExactState2D& s) {
        r.times.push_back(s.time);
        auto m1 = marginal_density(s, 1);
        const auto m2 = marginal_density(s, 2);
        double asym = 0.0;
        for (std::size_t i = 0; i < m1.size(); ++i) asym = std::max(asym, std::abs(m1[i] - m2[i]));
        r.max_marginal_asymmetry = std::max(r.max_marginal_asymmetry, asym);
        r.marginals.push_back(std::move(m1));
        r.coherence.push(s.time, coherence(s));
        r.max_norm_drift = std::max(r.max_norm_drift, std::abs(std::sqrt(s.norm_squared()) - 1.0));
        r.max_exchange_asymmetry = std::max(r.max_exchange_asymmetry, s.exchange_asymmetry());
        if (options.evolve) {
            const double e = exact_energy(s, free_h);
            r.energies.push_back(e);
            r.max_energy_drift = std::max(r.max_energy_drift, std::abs(e - e0) / std::max(std::abs(e0), 1e-300));
        }
        if (options.progress && options.evolve && std::abs(s.time - std::round(s.time)) < 1e-9) {
            std::fprintf(stderr, "exact: t = %.2f\n", s.time);
        }
    };

    if (!options.evolve) {
        record(gs.state);
        return r;
    }
    stage("exact-evolve");
    ExactEvolveOptions eo;
    eo.dt = config.dt_real;
    eo.snapshot_stride = config.snapshot_stride;
    eo.strict_boundary = options.strict_boundary;
    ExactState2D state = std::move(gs.state);
    r.report = exact_evolve(state, config.t_final, free_h, eo, record);
    r.rho_final = reduced_density_matrix(state);
    return r;
}

RunManifest run_experiment(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options) {
    Run run(&config, out_dir, options);
    return run.execute([&](Run& run) {
        json summary;
        if (!config.scan_alphas.empty()) {
            run.stage("scan-alpha");
            write_alpha_scan(run, scan(config, options));
        }
        TdqmcRunOptions to;
        to.progress = options.progress;
        to.on_stage = run.hook();
        const TdqmcRun main = run_tdqmc(config, to);
        run.stage("write");
        write_main_tdqmc(run, main);
        summary["tdqmc"] = tdqmc_summary(main);

        for (const auto mode : config.compare_modes) {
            if (mode == config.mode) continue;
            TdqmcRunOptions co = to;
            co.mode = mode;
            const TdqmcRun other = run_tdqmc(config, co);
            run.stage("write");
            write_compare(run, other);
            summary[file_tag(mode)] = tdqmc_summary(other);
        }

        if (config.run_exact) {
            ExactRunOptions xo;
            xo.progress = options.progress;
            xo.on_stage = run.hook();
            const ExactRun exact = run_exact(config, xo);
            run.stage("write");
            write_exact(run, exact);
            summary["exact"] = exact_summary(exact);
        }
        write_summary(run, summary);

        run.stage("analyze");
        analyze_into(run, config, true);
    });
}

RunManifest run_ground_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options) {
    Run run(&config, out_dir, options);
    return run.execute([&](Run& run) {
        TdqmcRunOptions to;
        to.evolve = false;
        to.progress = options.progress;
        to.on_stage = run.hook();
        const TdqmcRun r = run_tdqmc(config, to);
        run.stage("write");
        write_main_tdqmc(run, r);
        write_summary(run, json{{"tdqmc", tdqmc_summary(r)}});
    });
}

RunManifest run_evolve_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options) {
    Run run(&config, out_dir, options);
    return run.execute([&](Run& run) {
        TdqmcRunOptions to;
        to.progress = options.progress;
        to.on_stage = run.hook();
        const TdqmcRun r = run_tdqmc(config, to);
        run.stage("write");
        write_main_tdqmc(run, r);
        write_summary(run, json{{"tdqmc", tdqmc_summary(r)}});
    });
}

RunManifest run_exact_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options) {
    Run run(&config, out_dir, options);
    return run.execute([&](Run& run) {
        ExactRunOptions xo;
        xo.progress = options.progress;
        xo.on_stage = run.hook();
        const ExactRun r = run_exact(config, xo);
        run.stage("write");
        write_exact(run, r);
        write_summary(run, json{{"exact", exact_summary(r)}});
    });
}

RunManifest run_scan_command(const ExperimentConfig& config, const fs::path& out_dir, const PipelineOptions& options) {
    Run run(&config, out_dir, options);
    return run.execute([&](Run& run) {
        run.stage("scan-alpha");
        write_alpha_scan(run, scan(config, options));
    });
}

RunManifest analyze_directory(const fs::path& dir, const PipelineOptions& options) {
    ExperimentConfig config;
    RunManifest previous;
    if (fs::exists(dir / "manifest.json")) previous = read_manifest(dir / "manifest.json");
    if (!previous.config_json.empty()) config = config_from_json(previous.config_json);

    Run run(nullptr, dir, options, false);
    run.manifest().config_json = previous.config_json;
    for (const auto& f : previous.files) {
        if (f.path != "deviation.csv" && f.path != "visibility.csv") run.add(f.path);
    }
    return run.execute([&](Run& run) {
        run.stage("analyze");
        analyze_into(run, config, options.force);
    });
}

}  // namespace tdqmc
