#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace attrisk {

/// Deterministic random stream addressed by (seed, stream-id).
///
/// Each logical consumer (patient, bootstrap replicate) owns its own stream,
/// so output is reproducible for a given seed and stable under extension:
/// enlarging a cohort re-runs streams 0..n-1 with identical draws and only
/// appends new ones.  A 64-bit finaliser spreads (seed, stream) over the
/// mt19937_64 seed space so neighbouring ids start decorrelated.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

    /// Uniform draw on [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Unit-mean exponential draw via inversion; -log1p keeps small tails exact.
    double exponential() {
        return -std::log1p(-uniform());
    }

    /// Uniform integer on [0,n), unbiased via rejection.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = -n % n; // 2^64 mod n
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold) return x % n;
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace attrisk
