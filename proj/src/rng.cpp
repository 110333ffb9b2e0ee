#include "dls/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dls {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<double, 2> box_muller(std::uint32_t a, std::uint32_t b) {
    const double r = std::sqrt(-2.0 * std::log(to_unit_open(a)));
    const double phi = 2.0 * std::numbers::pi * to_unit_open(b);
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace

Philox4x32::Counter Philox4x32::block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint32_t stream)
    : seed_(seed),
      stream_(stream),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

Philox4x32::Counter CounterRng::raw(std::uint64_t step, std::uint32_t channel,
                                    std::uint32_t block) const {
    if (block >= (1u << 24) || channel >= 256u)
        throw std::out_of_range("CounterRng: block or channel out of range");
    return Philox4x32::block({static_cast<std::uint32_t>(step),
                              static_cast<std::uint32_t>(step >> 32),
                              (channel << 24) | block, stream_},
                             key_);
}

void CounterRng::normals(std::uint64_t step, std::uint32_t channel, std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t b = 0; 4 * b < n; ++b) {
        const auto w = raw(step, channel, static_cast<std::uint32_t>(b));
        const auto p = box_muller(w[0], w[1]);
        const auto q = box_muller(w[2], w[3]);
        const double z[4] = {p[0], p[1], q[0], q[1]};
        for (std::size_t lane = 0; lane < 4 && 4 * b + lane < n; ++lane) out[4 * b + lane] = z[lane];
    }
}

std::array<double, 2> CounterRng::normal_pair(std::uint64_t step, std::uint32_t channel,
                                              std::uint32_t index) const {
    const auto w = raw(step, channel, index);
    return box_muller(w[0], w[1]);
}

}  // namespace dls
