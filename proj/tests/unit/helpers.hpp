#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "tdqmc/grid.hpp"

namespace testing {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x, double sigma = 1.0) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Standard deviation of a tabulated density.
inline double density_width(const std::vector<double>& d, const tdqmc::Grid1D& g) {
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.position(i);
        m0 += d[i];
        m1 += d[i] * x;
        m2 += d[i] * x * x;
    }
    m1 /= m0;
    return std::sqrt(m2 / m0 - m1 * m1);
}

}  // namespace testing
