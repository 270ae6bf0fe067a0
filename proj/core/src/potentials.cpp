#include "tdqmc/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tdqmc/error.hpp"

namespace tdqmc {

NuclearFrame NuclearFrame::atom(double strength) {
    return NuclearFrame{{Nucleus{0.0, strength}}, true};
}

NuclearFrame NuclearFrame::molecule(double separation, double strength) {
    return NuclearFrame{{Nucleus{-0.5 * separation, strength}, Nucleus{0.5 * separation, strength}}, true};
}

double NuclearFrame::total_strength() const noexcept {
    double s = 0.0;
    for (const auto& n : nuclei) s += n.strength;
    return s;
}

double v_en(double x, const NuclearFrame& frame) {
    if (!frame.active) return 0.0;
    double v = 0.0;
    for (const auto& n : frame.nuclei) {
        const double d = x - n.position;
        v -= n.strength / std::sqrt(1.0 + d * d);
    }
    return v;
}

PotentialGrid v_en_grid(const GridPtr& grid, const NuclearFrame& frame) {
    PotentialGrid p(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) p.values[i] = v_en(grid->position(i), frame);
    return p;
}

double kernel_weight(double distance, double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("kernel_weight: sigma must be positive");
    const double r = distance / sigma;
    return std::exp(-0.5 * r * r);
}

std::string_view to_string(CouplingMode mode) noexcept {
    switch (mode) {
        case CouplingMode::optimized: return "optimized";
        case CouplingMode::ultra_correlated: return "ultra-correlated";
        case CouplingMode::mean_field: return "mean-field";
    }
    return "optimized";
}

CouplingMode parse_coupling_mode(std::string_view name) {
    if (name == "optimized") return CouplingMode::optimized;
    if (name == "ultra-correlated") return CouplingMode::ultra_correlated;
    if (name == "mean-field") return CouplingMode::mean_field;
    throw ConfigError("unknown coupling mode '" + std::string(name) +
                      "' (expected optimized | ultra-correlated | mean-field)");
}

void CouplingParams::validate() const {
    if (!(b >= 0.0)) throw ConfigError("coupling: b must be >= 0");
    if (!(sigma_floor > 0.0)) throw ConfigError("coupling: sigma_floor must be > 0");
    if (mode == CouplingMode::optimized) {
        for (double a : alpha) {
            if (!(a > 0.0)) throw ConfigError("coupling: alpha must be > 0 in optimized mode");
        }
    }
}

PotentialGrid effective_potential(const GridPtr& grid, std::span<const double> partner_walkers,
                                  std::size_t k_index, double sigma, double b, CouplingMode mode) {
    if (partner_walkers.empty()) throw StateError("effective_potential: partner walker set is empty");
    if (k_index >= partner_walkers.size()) throw StateError("effective_potential: walker index out of range");

    PotentialGrid out(grid);
    const auto x = grid->positions();
    switch (mode) {
        case CouplingMode::ultra_correlated: {
            const double partner = partner_walkers[k_index];
            for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = v_ee(x[i] - partner, b);
            break;
        }
        case CouplingMode::mean_field: {
            const double inv_m = 1.0 / static_cast<double>(partner_walkers.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                double s = 0.0;
                for (double xl : partner_walkers) s += v_ee(x[i] - xl, b);
                out.values[i] = s * inv_m;
            }
            break;
        }
        case CouplingMode::optimized: {
            const double center = partner_walkers[k_index];
            std::vector<double> w(partner_walkers.size());
            for (std::size_t l = 0; l < w.size(); ++l) w[l] = kernel_weight(partner_walkers[l] - center, sigma);
            const double z = std::accumulate(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                double s = 0.0;
                for (std::size_t l = 0; l < w.size(); ++l) s += w[l] * v_ee(x[i] - partner_walkers[l], b);
                out.values[i] = s / z;
            }
            break;
        }
    }
    return out;
}

double sigma_update(std::span<const double> walkers, double alpha, double sigma_floor) {
    if (walkers.empty()) return sigma_floor;
    const double n = static_cast<double>(walkers.size());
    const double mean = std::accumulate(walkers.begin(), walkers.end(), 0.0) / n;
    double var = 0.0;
    for (double x : walkers) var += (x - mean) * (x - mean);
    var /= n;
    return std::max(alpha * std::sqrt(var), sigma_floor);
}

namespace {

// F(l, i) = v_ee(x_i - x_l)
RowMatrix coulomb_rows(const Grid1D& grid, std::span<const double> partners, double b) {
    const auto x = grid.positions();
    RowMatrix f(static_cast<Eigen::Index>(partners.size()), static_cast<Eigen::Index>(x.size()));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t l = 0; l < static_cast<std::ptrdiff_t>(partners.size()); ++l) {
        const double xl = partners[static_cast<std::size_t>(l)];
        double* row = f.row(l).data();
        for (std::size_t i = 0; i < x.size(); ++i) row[i] = v_ee(x[i] - xl, b);
    }
    return f;
}

}  // namespace

void accumulate_effective_potentials(const Grid1D& grid, std::span<const double> partner_walkers,
                                     double sigma, double b, CouplingMode mode,
                                     const EffectivePotentialOptions& options, RowMatrix& out) {
    const auto m = static_cast<Eigen::Index>(partner_walkers.size());
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (partner_walkers.empty()) throw StateError("effective_potential: partner walker set is empty");
    if (out.cols() != n) throw ShapeError("effective_potential: output has wrong number of grid columns");
    if (b == 0.0) return;

    if (mode == CouplingMode::ultra_correlated) {
        if (out.rows() != m) throw ShapeError("effective_potential: index pairing needs equal walker counts");
        out += coulomb_rows(grid, partner_walkers, b);
        return;
    }

    const RowMatrix f = coulomb_rows(grid, partner_walkers, b);

    if (mode == CouplingMode::mean_field) {
        const Eigen::RowVectorXd mean = f.colwise().mean();
        out.rowwise() += mean;
        return;
    }

    if (out.rows() != m) throw ShapeError("effective_potential: output rows must match walker count");
    if (!(sigma > 0.0)) throw ParameterError("effective_potential: sigma must be positive");

    if (!options.kernel_cutoff) {
        // (x_l - x_k)^2 == (x_k - x_l)^2 exactly, so full rows keep the raw kernel symmetric
        RowMatrix w(m, m);
        const double inv_sigma = 1.0 / sigma;
        const Eigen::Map<const Eigen::ArrayXd> xs(partner_walkers.data(), m);
#pragma omp parallel for schedule(static)
        for (Eigen::Index k = 0; k < m; ++k) {
            const Eigen::ArrayXd r = (xs - partner_walkers[static_cast<std::size_t>(k)]) * inv_sigma;
            const Eigen::ArrayXd row = (-0.5 * r.square()).exp();
            w.row(k) = (row / row.sum()).matrix().transpose();
        }
        out.noalias() += w * f;
        return;
    }

    // Sparse path: partners sorted by position, each row touches only the
    // window |x_l - x_k| <= cutoff_sigmas * sigma.
    std::vector<std::size_t> order(partner_walkers.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return partner_walkers[a] < partner_walkers[c]; });
    std::vector<double> sorted(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = partner_walkers[order[i]];
    const double reach = options.cutoff_sigmas * sigma;

#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < m; ++k) {
        const double center = partner_walkers[static_cast<std::size_t>(k)];
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), center - reach) - sorted.begin();
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), center + reach) - sorted.begin();
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
        double z = 0.0;
        for (auto s = lo; s < hi; ++s) {
            const double r = (sorted[static_cast<std::size_t>(s)] - center) / sigma;
            const double wl = std::exp(-0.5 * r * r);
            acc += wl * f.row(static_cast<Eigen::Index>(order[static_cast<std::size_t>(s)]));
            z += wl;
        }
        out.row(k) += acc / z;
    }
}

}  // namespace tdqmc
