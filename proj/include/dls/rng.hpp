#pragma once

// Counter-based random streams. Every variate is a pure function of
// (seed, stream, step, channel, index), so trajectories run on any thread in
// any order produce identical noise.

#include <array>
#include <cstdint>
#include <span>

namespace dls {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key);
};

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint32_t stream);

    /// Four raw 32-bit words for block `block` of (step, channel).
    Philox4x32::Counter raw(std::uint64_t step, std::uint32_t channel, std::uint32_t block) const;

    /// Fills `out` with standard normals; out[i] comes from block i/4, lane i%4.
    void normals(std::uint64_t step, std::uint32_t channel, std::span<double> out) const;

    /// Two standard normals tied to (step, channel, index).
    std::array<double, 2> normal_pair(std::uint64_t step, std::uint32_t channel,
                                      std::uint32_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint32_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint32_t stream_;
    Philox4x32::Key key_;
};

/// Maps a 32-bit word to the open interval (0, 1).
inline double to_unit_open(std::uint32_t r) {
    return (static_cast<double>(r) + 0.5) * 0x1p-32;
}

}  // namespace dls
