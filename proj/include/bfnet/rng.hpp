#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bfnet {

// Philox4x32-10 counter-based generator. Draws are a pure function of
// (key, counter), so path-level parallelism can never reorder or change the
// stream: every (master_seed, path, interval, stream, pair) owns its block.
namespace philox {

struct Block {
    std::uint32_t x[4];
};

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t out[4] = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    ctr[0] = out[0];
    ctr[1] = out[1];
    ctr[2] = out[2];
    ctr[3] = out[3];
}

inline Block philox4x32_10(const Block& counter, std::uint32_t key0, std::uint32_t key1) {
    std::uint32_t ctr[4] = {counter.x[0], counter.x[1], counter.x[2], counter.x[3]};
    std::uint32_t key[2] = {key0, key1};
    for (int round = 0; round < 10; ++round) {
        round_once(ctr, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return Block{{ctr[0], ctr[1], ctr[2], ctr[3]}};
}

} // namespace philox

enum class NoiseStream : std::uint32_t {
    W = 0,          // driving Brownian motion
    B = 1,          // independent mixing copy
    Auxiliary = 2,  // scratch streams for harness-level sampling
};

/// Stateless Gaussian source: normal(path, interval, component) is a pure
/// function of the master seed and those indices.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t master_seed, NoiseStream stream = NoiseStream::W)
        : key0_(static_cast<std::uint32_t>(master_seed)),
          key1_(static_cast<std::uint32_t>(master_seed >> 32) ^
                (static_cast<std::uint32_t>(stream) * 0x85EBCA6Bu)) {}

    /// Two independent uniforms in (0,1), one Philox block per (path, interval, pair).
    void uniform_pair(std::uint64_t path, std::uint32_t interval, std::uint32_t pair,
                      double& u0, double& u1) const {
        philox::Block ctr{{static_cast<std::uint32_t>(path),
                           static_cast<std::uint32_t>(path >> 32), interval, pair}};
        philox::Block out = philox::philox4x32_10(ctr, key0_, key1_);
        u0 = to_unit(out.x[0], out.x[1]);
        u1 = to_unit(out.x[2], out.x[3]);
    }

    /// Standard normal component c of the (path, interval) draw, via Box-Muller.
    double normal(std::uint64_t path, std::uint32_t interval, std::uint32_t component) const {
        double u0 = 0.0, u1 = 0.0;
        uniform_pair(path, interval, component / 2, u0, u1);
        const double radius = std::sqrt(-2.0 * std::log(u0));
        const double angle = 2.0 * std::numbers::pi * u1;
        return (component % 2 == 0) ? radius * std::cos(angle) : radius * std::sin(angle);
    }

private:
    // 64 significant bits folded into (0,1); never returns 0 or 1 exactly.
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint32_t key0_;
    std::uint32_t key1_;
};

} // namespace bfnet
