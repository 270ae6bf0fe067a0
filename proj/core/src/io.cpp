#include "tdqmc/io.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include "tdqmc/error.hpp"

#ifndef TDQMC_VERSION
#define TDQMC_VERSION "unknown"
#endif

namespace tdqmc {
namespace {

using json = nlohmann::json;

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    return in;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw IoError("bad number '" + s + "' in '" + path.string() + "'");
    return v;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return buf.data();
}

void write_density_csv(const fs::path& path, std::span<const double> times, const Grid1D& grid,
                       std::span<const std::vector<double>> densities) {
    if (times.size() != densities.size()) throw ShapeError("write_density_csv: one density per time required");
    for (const auto& d : densities) {
        if (d.size() != grid.size()) throw ShapeError("write_density_csv: density length does not match grid");
    }
    auto out = open_out(path);
    out << 'x';
    for (double t : times) out << ",t=" << format_double(t);
    out << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out << format_double(grid.position(i));
        for (const auto& d : densities) out << ',' << format_double(d[i]);
        out << '\n';
    }
    finish(out, path);
}

DensityTable read_density_csv(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file '" + path.string() + "'");
    const auto header = split(line);
    if (header.empty() || header[0] != "x") throw IoError("'" + path.string() + "' is not a density CSV");
    DensityTable t;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c].rfind("t=", 0) != 0) throw IoError("bad column '" + header[c] + "' in '" + path.string() + "'");
        t.times.push_back(parse_double(header[c].substr(2), path));
    }
    t.columns.resize(t.times.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) throw IoError("ragged row in '" + path.string() + "'");
        t.x.push_back(parse_double(cells[0], path));
        for (std::size_t c = 1; c < cells.size(); ++c) t.columns[c - 1].push_back(parse_double(cells[c], path));
    }
    return t;
}

void write_table_csv(const fs::path& path, std::span<const std::string> header,
                     std::span<const std::vector<double>> columns) {
    if (header.size() != columns.size()) throw ShapeError("write_table_csv: header/column count mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw ShapeError("write_table_csv: columns differ in length");
    }
    auto out = open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
        out << '\n';
    }
    finish(out, path);
}

const std::vector<double>& Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return columns[i];
    }
    throw IoError("table has no column '" + std::string(name) + "'");
}

Table read_table_csv(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file '" + path.string() + "'");
    Table t;
    t.header = split(line);
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) throw IoError("ragged row in '" + path.string() + "'");
        for (std::size_t c = 0; c < cells.size(); ++c) t.columns[c].push_back(parse_double(cells[c], path));
    }
    return t;
}

std::vector<fs::path> write_density_matrix(const fs::path& base, const DensityMatrixCoord& rho) {
    fs::path bin = base;
    bin += ".bin";
    fs::path side = base;
    side += ".json";

    const std::size_t count = rho.rho.size() * 2;
    std::vector<double> raw(count);
    for (std::size_t i = 0; i < rho.rho.size(); ++i) {
        raw[2 * i] = rho.rho[i].real();
        raw[2 * i + 1] = rho.rho[i].imag();
    }
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : raw) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            bits = __builtin_bswap64(bits);
            v = std::bit_cast<double>(bits);
        }
    }
    {
        auto out = open_out(bin, std::ios::out | std::ios::binary);
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(double)));
        finish(out, bin);
    }
    {
        json j;
        j["n"] = rho.size();
        j["x_min"] = rho.grid->x_min();
        j["x_max"] = rho.grid->x_max();
        j["time"] = rho.time;
        j["trace"] = rho.trace();
        j["purity"] = rho.purity();
        auto out = open_out(side);
        out << j.dump(2) << '\n';
        finish(out, side);
    }
    return {bin, side};
}

DensityMatrixCoord read_density_matrix(const fs::path& base) {
    fs::path bin = base;
    bin += ".bin";
    fs::path side = base;
    side += ".json";
    json j;
    {
        auto in = open_in(side);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw IoError("bad sidecar '" + side.string() + "': " + e.what());
        }
    }
    const auto n = j.at("n").get<std::size_t>();
    auto grid = make_grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(), n);
    DensityMatrixCoord rho(grid, j.at("time").get<double>());
    auto in = open_in(bin, std::ios::in | std::ios::binary);
    const std::size_t count = n * n * 2;
    std::vector<double> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
        throw IoError("'" + bin.string() + "' is shorter than n*n*16 bytes");
    }
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : raw) v = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(v)));
    }
    for (std::size_t i = 0; i < rho.rho.size(); ++i) rho.rho[i] = Complex(raw[2 * i], raw[2 * i + 1]);
    return rho;
}

std::string sha256_file(const fs::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256: init failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
            throw IoError("sha256: update failed");
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) throw IoError("sha256: final failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

void prepare_output_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) throw IoError("'" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir, ec) && !force) {
            throw IoError("output directory '" + dir.string() + "' is not empty (use --force to overwrite)");
        }
        return;
    }
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_manifest(const fs::path& dir, RunManifest& manifest, std::span<const fs::path> files) {
    manifest.files.clear();
    for (const auto& f : files) {
        const fs::path full = f.is_absolute() ? f : dir / f;
        if (!fs::exists(full)) continue;  // partial outputs of a failed stage
        ManifestEntry e;
        e.path = fs::relative(full, dir).generic_string();
        e.bytes = fs::file_size(full);
        e.sha256 = sha256_file(full);
        manifest.files.push_back(std::move(e));
    }
    std::sort(manifest.files.begin(), manifest.files.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });

    json j;
    j["status"] = manifest.status;
    if (!manifest.failed_stage.empty()) j["failed_stage"] = manifest.failed_stage;
    if (!manifest.error.empty()) j["error"] = manifest.error;
    j["version"] = manifest.version;
    j["started_at"] = manifest.started_at;
    j["wall_clock_seconds"] = manifest.wall_clock_seconds;
    try {
        j["config"] = json::parse(manifest.config_json.empty() ? "{}" : manifest.config_json);
    } catch (const json::exception&) {
        j["config"] = manifest.config_json;
    }
    j["files"] = json::array();
    for (const auto& e : manifest.files) {
        j["files"].push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
    }
    const fs::path path = dir / "manifest.json";
    auto out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

RunManifest read_manifest(const fs::path& path) {
    auto in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad manifest '" + path.string() + "': " + e.what());
    }
    RunManifest m;
    m.status = j.value("status", "");
    m.failed_stage = j.value("failed_stage", "");
    m.error = j.value("error", "");
    m.version = j.value("version", "");
    m.started_at = j.value("started_at", "");
    m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
    if (j.contains("config")) m.config_json = j["config"].dump(2);
    for (const auto& f : j.value("files", json::array())) {
        m.files.push_back({f.at("path").get<std::string>(), f.at("bytes").get<std::uintmax_t>(),
                           f.at("sha256").get<std::string>()});
    }
    return m;
}

std::string library_version() { return TDQMC_VERSION; }

}  // namespace tdqmc
