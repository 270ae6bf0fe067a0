#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tdqmc/error.hpp"
#include "tdqmc/potentials.hpp"
#include "tdqmc/rng.hpp"

using namespace tdqmc;

TEST_CASE("nuclear attraction") {
    CHECK(v_en(0.0, NuclearFrame::atom()) == -2.0);
    auto released = NuclearFrame::atom();
    released.active = false;
    for (double x : {-3.0, 0.0, 11.0}) CHECK(v_en(x, released) == 0.0);
    CHECK(v_en(4.0, NuclearFrame::molecule(8.0, 1.0)) == doctest::Approx(-1.0 - 1.0 / std::sqrt(65.0)).epsilon(1e-14));
    CHECK(v_en(4.0, NuclearFrame::molecule()) == doctest::Approx(-1.12403).epsilon(1e-5));
    CHECK(NuclearFrame::molecule().total_strength() == 2.0);
}

TEST_CASE("electron repulsion") {
    CHECK(v_ee(0.0, 1.0) == 1.0);
    CHECK(v_ee(3.7, 0.0) == 0.0);
    CHECK(v_ee(std::sqrt(3.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("kernel weight") {
    CHECK(kernel_weight(0.0, 0.7) == 1.0);
    CHECK(kernel_weight(0.7, 0.7) == doctest::Approx(0.60653066).epsilon(1e-8));
    CHECK(kernel_weight(7.0, 0.7) < 2e-22);
    CHECK_THROWS_AS(kernel_weight(1.0, 0.0), ParameterError);
    CHECK_THROWS_AS(kernel_weight(1.0, -1.0), ParameterError);
}

TEST_CASE("sigma update") {
    CHECK(sigma_update(std::vector<double>{-1.0, 1.0}, 0.6, 1e-3) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(sigma_update(std::vector<double>(5, 2.5), 0.6, 1e-3) == 1e-3);
    CHECK(sigma_update(std::vector<double>{0.0, 0.0, 3.0, 3.0}, 1.0, 1e-3) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("coupling modes parse and print") {
    for (auto m : {CouplingMode::optimized, CouplingMode::ultra_correlated, CouplingMode::mean_field}) {
        CHECK(parse_coupling_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_coupling_mode("hartree-fock"), ConfigError);
    CouplingParams p;
    p.b = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("effective potential hand value") {
    // partners at {1, 2}, own partner at 1, sigma 1, b 1, x = 0:
    // (1/sqrt2 + e^-1/2 / sqrt5) / (1 + e^-1/2)
    auto g = make_grid(-8.0, 8.0, 64);
    const std::vector<double> walkers{1.0, 2.0};
    const auto v = effective_potential(g, walkers, 0, 1.0, 1.0, CouplingMode::optimized);
    const std::size_t zero = 32;
    REQUIRE(g->position(zero) == 0.0);
    const double w = std::exp(-0.5);
    const double expected = (1.0 / std::sqrt(2.0) + w / std::sqrt(5.0)) / (1.0 + w);
    CHECK(v.values[zero] == doctest::Approx(expected).epsilon(1e-13));
    CHECK(std::abs(v.values[zero] - 0.608987) < 1e-5);
}

TEST_CASE("effective potential limits") {
    auto g = make_grid(-20.0, 20.0, 128);
    RandomStream rng(11, {});
    std::vector<double> walkers(40);
    for (auto& x : walkers) x = 2.0 * rng.normal();

    SUBCASE("one partner gives the bare repulsion") {
        const std::vector<double> one{1.3};
        for (double sigma : {1e-3, 0.5, 1e6}) {
            const auto v = effective_potential(g, one, 0, sigma, 0.8, CouplingMode::optimized);
            for (std::size_t i = 0; i < g->size(); ++i) {
                CHECK(v.values[i] == doctest::Approx(v_ee(g->position(i) - 1.3, 0.8)).epsilon(1e-14));
            }
        }
    }
    SUBCASE("huge sigma reproduces mean field") {
        const auto mf = effective_potential(g, walkers, 3, 1.0, 1.0, CouplingMode::mean_field);
        const auto wide = effective_potential(g, walkers, 3, 1e6, 1.0, CouplingMode::optimized);
        for (std::size_t i = 0; i < g->size(); ++i) CHECK(std::abs(mf.values[i] - wide.values[i]) < 1e-10);
        const auto other = effective_potential(g, walkers, 17, 1.0, 1.0, CouplingMode::mean_field);
        CHECK(other.values == mf.values);
    }
    SUBCASE("ultra-correlated pairs index k with index k") {
        const auto v = effective_potential(g, walkers, 5, 0.3, 1.0, CouplingMode::ultra_correlated);
        for (std::size_t i = 0; i < g->size(); ++i) CHECK(v.values[i] == doctest::Approx(v_ee(g->position(i) - walkers[5], 1.0)).epsilon(1e-14));
    }
    SUBCASE("narrow kernel approaches the partner cluster") {
        std::vector<double> clusters{-5.0, -5.0001, 5.0, 5.0002};
        const auto v = effective_potential(g, clusters, 2, 1e-3, 1.0, CouplingMode::optimized);
        for (std::size_t i = 0; i < g->size(); ++i) {
            CHECK(std::abs(v.values[i] - v_ee(g->position(i) - 5.0, 1.0)) < 1e-4);
        }
    }
    SUBCASE("b = 0 vanishes in every mode") {
        for (auto m : {CouplingMode::optimized, CouplingMode::ultra_correlated, CouplingMode::mean_field}) {
            const auto v = effective_potential(g, walkers, 0, 0.7, 0.0, m);
            CHECK(std::all_of(v.values.begin(), v.values.end(), [](double x) { return x == 0.0; }));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(effective_potential(g, std::vector<double>{}, 0, 1.0, 1.0, CouplingMode::optimized), StateError);
        CHECK_THROWS_AS(effective_potential(g, walkers, 40, 1.0, 1.0, CouplingMode::optimized), StateError);
    }
}

TEST_CASE("effective potential is a bounded convex combination") {
    auto g = make_grid(-20.0, 20.0, 128);
    for (std::uint32_t trial = 0; trial < 20; ++trial) {
        RandomStream rng(99, {trial, 0, 0});
        const std::size_t m = 2 + trial;
        std::vector<double> walkers(m);
        for (auto& x : walkers) x = 4.0 * rng.normal();
        const double sigma = 0.05 + 2.0 * rng.uniform();
        const double b = 2.0 * rng.uniform();
        for (std::size_t k = 0; k < m; k += 3) {
            const auto v = effective_potential(g, walkers, k, sigma, b, CouplingMode::optimized);
            for (std::size_t i = 0; i < g->size(); ++i) {
                double lo = 1e300, hi = -1e300;
                for (double xl : walkers) {
                    lo = std::min(lo, v_ee(g->position(i) - xl, b));
                    hi = std::max(hi, v_ee(g->position(i) - xl, b));
                }
                CHECK(v.values[i] >= lo - 1e-14);
                CHECK(v.values[i] <= hi + 1e-14);
                CHECK(v.values[i] <= b + 1e-14);
            }
        }
    }
}

TEST_CASE("batched effective potentials match the per-walker form") {
    auto g = make_grid(-20.0, 20.0, 64);
    RandomStream rng(5, {});
    std::vector<double> walkers(30);
    for (auto& x : walkers) x = 3.0 * rng.normal();
    for (auto mode : {CouplingMode::optimized, CouplingMode::ultra_correlated, CouplingMode::mean_field}) {
        RowMatrix out = RowMatrix::Zero(30, 64);
        accumulate_effective_potentials(*g, walkers, 0.9, 1.0, mode, {}, out);
        for (std::size_t k = 0; k < 30; ++k) {
            const auto v = effective_potential(g, walkers, k, 0.9, 1.0, mode);
            for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(out(k, i) - v.values[i]) < 1e-13);
        }
    }
}

TEST_CASE("kernel cutoff changes nothing beyond 1e-8") {
    auto g = make_grid(-40.0, 40.0, 256);
    RandomStream rng(21, {});
    std::vector<double> walkers(500);
    for (auto& x : walkers) x = (rng.uniform() < 0.5 ? -4.0 : 4.0) + 1.5 * rng.normal();
    const double sigma = sigma_update(walkers, 0.2, 1e-3);
    RowMatrix dense = RowMatrix::Zero(500, 256);
    RowMatrix sparse = RowMatrix::Zero(500, 256);
    accumulate_effective_potentials(*g, walkers, sigma, 1.0, CouplingMode::optimized, {}, dense);
    EffectivePotentialOptions cut;
    cut.kernel_cutoff = true;
    accumulate_effective_potentials(*g, walkers, sigma, 1.0, CouplingMode::optimized, cut, sparse);
    CHECK((dense - sparse).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("potentials stay bounded") {
    const auto frame = NuclearFrame::molecule(8.0, 1.0);
    for (double x = -30.0; x <= 30.0; x += 0.37) {
        CHECK(std::abs(v_en(x, frame)) <= frame.total_strength());
        CHECK(v_ee(x, 0.7) <= 0.7);
    }
}
