#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tdqmc/density_matrix.hpp"
#include "tdqmc/grid.hpp"

namespace tdqmc {

namespace fs = std::filesystem;

/// Shortest decimal form that round-trips (17 significant digits).
std::string format_double(double v);

/// CSV with header `x,t=<t0>,t=<t1>,...`; one row per grid node.
void write_density_csv(const fs::path& path, std::span<const double> times, const Grid1D& grid,
                       std::span<const std::vector<double>> densities);

struct DensityTable {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> columns;  // one per time
};

DensityTable read_density_csv(const fs::path& path);

/// Generic numeric table: header names, then one row per index across columns.
void write_table_csv(const fs::path& path, std::span<const std::string> header,
                     std::span<const std::vector<double>> columns);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& column(std::string_view name) const;
};

Table read_table_csv(const fs::path& path);

/// Writes `<base>.bin` (little-endian float64, row-major, Re/Im interleaved) and
/// `<base>.json` with {n, x_min, x_max, time, trace, purity}. Returns both paths.
std::vector<fs::path> write_density_matrix(const fs::path& base, const DensityMatrixCoord& rho);

/// Reads a matrix written by write_density_matrix.
DensityMatrixCoord read_density_matrix(const fs::path& base);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Creates `dir` if needed. A non-empty directory is refused unless `force`.
void prepare_output_dir(const fs::path& dir, bool force);

struct ManifestEntry {
    std::string path;  // relative to the output directory
    std::uintmax_t bytes = 0;
    std::string sha256;
};

struct RunManifest {
    std::string status = "ok";  // ok | failed
    std::string failed_stage;
    std::string error;
    std::string config_json;
    std::string version;
    std::string started_at;  // UTC, ISO 8601
    double wall_clock_seconds = 0.0;
    std::vector<ManifestEntry> files;
};

/// Checksums every listed file (relative to dir) and writes dir/manifest.json.
void write_manifest(const fs::path& dir, RunManifest& manifest, std::span<const fs::path> files);
RunManifest read_manifest(const fs::path& path);

/// Library version string.
std::string library_version();

}  // namespace tdqmc
