// Command-line front end: one subcommand per pipeline stage.

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "tdqmc/config.hpp"
#include "tdqmc/error.hpp"
#include "tdqmc/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool force = false;
    int threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
    auto* cfg = cmd->add_option("--config", f.config, "JSON experiment configuration");
    auto* preset = cmd->add_option("--preset", f.preset, "Start from a named preset instead of a file");
    if (needs_config) {
        cfg->excludes(preset);
        preset->excludes(cfg);
    }
    cmd->add_option("--out", f.out, "Output directory (overrides out_dir)");
    cmd->add_option("--seed", f.seed, "RNG seed (overrides seed)");
    cmd->add_flag("--force", f.force, "Allow writing into a non-empty output directory");
    cmd->add_option("--threads", f.threads, "Worker threads (default: OpenMP default)")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--quiet", f.quiet, "Suppress progress lines");
}

tdqmc::ExperimentConfig resolve(const CommonFlags& f) {
    tdqmc::ExperimentConfig c;
    if (!f.config.empty()) {
        c = tdqmc::load_config(f.config);
    } else if (!f.preset.empty()) {
        c = tdqmc::preset_config(f.preset);
    } else {
        throw tdqmc::ConfigError("give --config <file> or --preset <name>");
    }
    if (f.seed) c.seed = *f.seed;
    if (!f.out.empty()) c.out_dir = f.out;
    c.validate();
    return c;
}

int report(const tdqmc::RunManifest& m, const std::string& dir) {
    if (m.status == "ok") {
        std::printf("wrote %zu files to %s (%.1f s)\n", m.files.size(), dir.c_str(), m.wall_clock_seconds);
        return 0;
    }
    std::fprintf(stderr, "error: stage '%s' failed: %s\n", m.failed_stage.c_str(), m.error.c_str());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent quantum Monte Carlo for two electrons in one dimension"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tdqmc::library_version());

    CommonFlags flags;
    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"ground", "Relax the guide-wave ensemble in imaginary time"},
        {"evolve", "Relax, release the nuclei and propagate in real time"},
        {"exact", "Exact two-body ground state and real-time evolution"},
        {"scan-alpha", "Variational scan of the correlation-length factor"},
        {"run", "Full pipeline including comparison modes and analysis"},
    };
    for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), flags, true);

    auto* analyze = app.add_subcommand("analyze", "Recompute deviation and visibility tables of a run directory");
    std::string analyze_dir;
    analyze->add_option("--out", analyze_dir, "Run directory to analyze")->required();
    analyze->add_flag("--force", flags.force, "Overwrite existing analysis tables");
    analyze->add_option("--threads", flags.threads, "Worker threads")->check(CLI::NonNegativeNumber);

    auto* presets = app.add_subcommand("presets", "List preset names");

    CLI11_PARSE(app, argc, argv);

    if (flags.threads > 0) omp_set_num_threads(flags.threads);

    try {
        if (presets->parsed()) {
            for (const auto& name : tdqmc::preset_names()) std::cout << name << '\n';
            return 0;
        }
        tdqmc::PipelineOptions po;
        po.force = flags.force;
        po.progress = !flags.quiet;
        if (analyze->parsed()) return report(tdqmc::analyze_directory(analyze_dir, po), analyze_dir);

        const auto config = resolve(flags);
        const std::string& out = config.out_dir;
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "ground") return report(tdqmc::run_ground_command(config, out, po), out);
        if (cmd == "evolve") return report(tdqmc::run_evolve_command(config, out, po), out);
        if (cmd == "exact") return report(tdqmc::run_exact_command(config, out, po), out);
        if (cmd == "scan-alpha") return report(tdqmc::run_scan_command(config, out, po), out);
        return report(tdqmc::run_experiment(config, out, po), out);
    } catch (const tdqmc::Error& e) {
        std::fprintf(stderr, "error: stage 'config': %s\n", e.what());
        return 2;
    }
}
