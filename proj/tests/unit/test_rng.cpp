#include <doctest.h>

#include <cmath>
#include <vector>

#include "tdqmc/rng.hpp"

using namespace tdqmc;

// Known-answer vectors of the Random123 reference implementation.
TEST_CASE("philox 4x32-10 known answers") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are addressed by seed, epoch, electron and walker") {
    auto draw = [](std::uint64_t seed, StreamId id) {
        RandomStream s(seed, id);
        std::vector<double> out(6);
        for (auto& v : out) v = s.uniform();
        return out;
    };
    CHECK(draw(1, {3, 1, 7}) == draw(1, {3, 1, 7}));
    CHECK(draw(1, {3, 1, 7}) != draw(2, {3, 1, 7}));
    CHECK(draw(1, {3, 1, 7}) != draw(1, {4, 1, 7}));
    CHECK(draw(1, {3, 1, 7}) != draw(1, {3, 0, 7}));
    CHECK(draw(1, {3, 1, 7}) != draw(1, {3, 1, 8}));
}

TEST_CASE("uniform and normal moments") {
    RandomStream s(42, {});
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0, lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}
