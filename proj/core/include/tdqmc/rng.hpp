#pragma once

#include <array>
#include <cstdint>

namespace tdqmc {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter counter, Key key) noexcept;
};

/// Address of one random stream: the same (seed, epoch, electron, walker)
/// always yields the same sequence, independent of scheduling.
struct StreamId {
    std::uint64_t epoch = 0;
    std::uint32_t electron = 0;
    std::uint32_t walker = 0;
};

/// Sequential draws from a single counter-based stream.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamId id) noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Standard normal via Box-Muller.
    double normal() noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    Philox4x32::Counter counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tdqmc
