#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "tdqmc/analysis.hpp"
#include "tdqmc/error.hpp"
#include "tdqmc/rng.hpp"

using namespace tdqmc;

TEST_CASE("expectation values") {
    auto g = make_grid(-20.0, 20.0, 256);
    std::vector<Wavefunction1D> waves{gaussian_wave(g, 0.0, 1.0), gaussian_wave(g, 0.0, 2.0)};
    const auto rho = build_density_matrix(waves);
    CHECK(expectation(rho, std::vector<double>(256, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> x(g->positions().begin(), g->positions().end());
    CHECK(std::abs(expectation(rho, x)) < 1e-8);

    // the identity kernel delta(x - x')/dx reproduces the trace
    std::vector<Complex> identity(256 * 256, 0.0);
    for (std::size_t i = 0; i < 256; ++i) identity[i * 256 + i] = 1.0 / g->dx();
    CHECK(expectation_kernel(rho, identity) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(expectation(rho, std::vector<double>(10, 1.0)), ShapeError);
}

TEST_CASE("anti-diagonal coherence of a pure symmetric Gaussian") {
    auto g = make_grid(-20.0, 20.0, 256);
    const auto phi = gaussian_wave(g, 0.0, 1.2);
    const auto rho = build_density_matrix(std::vector<Wavefunction1D>{phi});
    const auto d = density(phi);
    const double dmax = *std::max_element(d.begin(), d.end());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (d[i] > kCoherenceMaskLevel * dmax) {
            sum += d[i];
            ++count;
        }
    }
    CHECK(coherence_antidiagonal(rho) == doctest::Approx(sum / count).epsilon(1e-12));
    CHECK(coherence(rho).degree == doctest::Approx(1.0).epsilon(1e-12));

    WaveEnsemble ens(g, 1);
    ens.set(0, phi.amplitudes);
    CHECK(coherence(ens).raw == doctest::Approx(coherence(rho).raw).epsilon(1e-12));

    auto lopsided = make_grid(-10.0, 30.0, 256);
    CHECK_THROWS_AS(coherence(build_density_matrix(std::vector<Wavefunction1D>{gaussian_wave(lopsided, 0, 1)})),
                    ConfigError);
}

TEST_CASE("coherence trace normalization") {
    CoherenceTrace t;
    t.push(0.0, {0.4, 0.8});
    t.push(1.0, {0.3, 0.6});
    t.push(2.0, {0.1, 0.2});
    CHECK(t.normalized[0] == 1.0);
    CHECK(t.degree_normalized[0] == 1.0);
    CHECK(t.normalized[1] == doctest::Approx(0.75));
    CHECK(t.first_time_below(0.5) == 2.0);
    CHECK(t.first_time_below(0.1) < 0.0);
}

TEST_CASE("Silverman bandwidth") {
    // 512 samples at each of +-c with sample std exactly 1: IQR/1.34 > 1
    const double c = std::sqrt(1023.0 / 1024.0);
    std::vector<double> s;
    for (int i = 0; i < 512; ++i) {
        s.push_back(-c);
        s.push_back(c);
    }
    CHECK(silverman_bandwidth(s) == doctest::Approx(0.225).epsilon(1e-12));
}

TEST_CASE("kde of two walkers") {
    auto g = make_grid(-10.0, 10.0, 512);
    const auto d = kde_density(std::vector<double>{-1.0, 1.0}, *g);
    double sum = 0.0;
    for (double v : d) sum += v * g->dx();
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < 256; ++i) CHECK(std::abs(d[i] - d[512 - i]) < 1e-12);
    CHECK_THROWS_AS(kde_density(std::vector<double>{0.5}, *g), DegenerateError);
}

TEST_CASE("kde of normal draws converges to the normal density") {
    auto g = make_grid(-10.0, 10.0, 512);
    RandomStream rng(8, {});
    std::vector<double> s(10000);
    for (auto& x : s) x = rng.normal();
    const auto d = kde_density(s, *g);
    std::vector<double> exact(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) exact[i] = testing::normal_pdf(g->position(i));
    CHECK(l1_deviation(d, exact, *g) < 0.05);
}

TEST_CASE("L1 deviation is a metric") {
    auto g = make_grid(-10.0, 10.0, 256);
    auto p = density(gaussian_wave(g, -1.0, 1.0));
    auto q = density(gaussian_wave(g, 0.5, 0.7));
    auto r = density(gaussian_wave(g, 2.0, 1.5));
    CHECK(l1_deviation(p, p, *g) == 0.0);
    CHECK(l1_deviation(p, q, *g) == doctest::Approx(l1_deviation(q, p, *g)).epsilon(1e-15));
    CHECK(l1_deviation(p, r, *g) <= l1_deviation(p, q, *g) + l1_deviation(q, r, *g) + 1e-15);
    CHECK(l1_deviation(p, q, *g) > 0.0);

    std::vector<double> left(256, 0.0), right(256, 0.0);
    for (std::size_t i = 0; i < 128; ++i) left[i] = 1.0 / (128 * g->dx());
    for (std::size_t i = 128; i < 256; ++i) right[i] = 1.0 / (128 * g->dx());
    CHECK(l1_deviation(left, right, *g) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(l1_deviation(left, std::vector<double>(3), *g), ShapeError);
}

TEST_CASE("resampling between grids keeps the shape") {
    auto fine = make_grid(-20.0, 20.0, 1024);
    auto coarse = make_grid(-20.0, 20.0, 256);
    const auto p = density(gaussian_wave(coarse, 0.3, 1.0));
    const auto up = resample_density(p, *coarse, *fine);
    const auto exact = density(gaussian_wave(fine, 0.3, 1.0));
    CHECK(l1_deviation(up, exact, *fine) < 5e-3);
}

TEST_CASE("smoothing widens a Gaussian in quadrature") {
    auto g = make_grid(-30.0, 30.0, 1024);
    const auto p = density(gaussian_wave(g, 0.0, 1.0));
    const auto s = smooth_density(p, *g, 0.75);
    CHECK(testing::density_width(s, *g) == doctest::Approx(1.25).epsilon(1e-6));
    CHECK(smooth_density(p, *g, 0.0) == p);
}

TEST_CASE("fringe visibility") {
    auto g = make_grid(-40.0, 40.0, 1024);
    std::vector<double> fringes(g->size()), flat(g->size(), 0.3), lobes(g->size());
    const double k = 2.0 * std::numbers::pi * 8.0 / g->length();
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double x = g->position(i);
        fringes[i] = 1.0 + std::cos(k * x);
        lobes[i] = std::exp(-0.5 * (x - 4) * (x - 4)) + std::exp(-0.5 * (x + 4) * (x + 4));
    }
    CHECK(fringe_visibility(fringes, *g) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fringe_visibility(flat, *g) == 0.0);
    // a single dip between two packets is not a fringe pattern
    CHECK(fringe_visibility(lobes, *g) == 0.0);

    // weaker contrast reads lower
    std::vector<double> faint(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) faint[i] = 1.0 + 0.3 * std::cos(k * g->position(i));
    CHECK(fringe_visibility(faint, *g) == doctest::Approx(0.3).epsilon(1e-4));

    VisibilityOptions bad;
    bad.window = 0.0;
    CHECK_THROWS_AS(fringe_visibility(flat, *g, bad), ParameterError);
}

TEST_CASE("population statistics") {
    const std::vector<double> s{0.0, 0.0, 3.0, 3.0};
    CHECK(sample_mean(s) == 1.5);
    CHECK(population_std(s) == 1.5);
}
