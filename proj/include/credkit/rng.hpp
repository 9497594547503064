// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>

namespace credkit {

/// Purposes of per-name random streams inside the Monte Carlo engine.
/// Keeping them in the counter key makes every draw independent of
/// evaluation order and worker partitioning.
enum class StreamPurpose : std::uint32_t {
    PathDraw = 1,
    DefaultTime = 2,
    Recovery = 3,
};

/// Counter-based generator (Philox 4x32-10). A stream is keyed by
/// (seed, path, name, purpose); draws within the stream advance a local
/// counter, so any stream can be reconstructed independently.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t path, std::uint32_t name,
                 StreamPurpose purpose)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          c1_(name),
          c2_(static_cast<std::uint32_t>(path) ^ (static_cast<std::uint32_t>(purpose) << 28)),
          c3_(static_cast<std::uint32_t>(path >> 32) ^ static_cast<std::uint32_t>(purpose)) {}

    std::uint64_t next_u64() {
        if (have_ == 0) {
            refill();
            have_ = 2;
        }
        --have_;
        std::uint64_t v = buf_[1 - have_];
        return v;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1): never returns an exact endpoint.
    double next_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // URBG interface (for std distributions in cross-check samplers).
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

private:
    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b, std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        lo = static_cast<std::uint32_t>(p);
        return static_cast<std::uint32_t>(p >> 32);
    }

    void refill() {
        constexpr std::uint32_t kM0 = 0xD2511F53u;
        constexpr std::uint32_t kM1 = 0xCD9E8D57u;
        constexpr std::uint32_t kW0 = 0x9E3779B9u;
        constexpr std::uint32_t kW1 = 0xBB67AE85u;
        std::uint32_t x0 = block_, x1 = c1_, x2 = c2_, x3 = c3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, lo1;
            std::uint32_t hi0 = mulhi(kM0, x0, lo0);
            std::uint32_t hi1 = mulhi(kM1, x2, lo1);
            std::uint32_t y0 = hi1 ^ x1 ^ k0;
            std::uint32_t y1 = lo1;
            std::uint32_t y2 = hi0 ^ x3 ^ k1;
            std::uint32_t y3 = lo0;
            x0 = y0; x1 = y1; x2 = y2; x3 = y3;
            k0 += kW0;
            k1 += kW1;
        }
        buf_[0] = (static_cast<std::uint64_t>(x0) << 32) | x1;
        buf_[1] = (static_cast<std::uint64_t>(x2) << 32) | x3;
        ++block_;
    }

    std::uint32_t key0_, key1_;
    std::uint32_t c1_, c2_, c3_;
    std::uint32_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int have_ = 0;
};

} // namespace credkit
