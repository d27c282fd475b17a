#pragma once

#include <cmath>
#include <cstdint>

namespace autoscope {

/// Deterministic splitmix64 stream. All randomness in the project flows
/// through this type; std:: distributions are avoided on purpose because
/// their output is implementation-defined and would break bit-for-bit
/// reproducibility of seeded runs across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [0, n). n must be > 0.
    int next_int(int n) {
        // modulo with rejection to kill the bias
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return static_cast<int>(v % un);
    }

    /// Standard normal via Box-Muller (cosine branch only).
    double next_gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Independent substream derived from (seed, stream) -- used to give each
    /// operation and each plane its own generator without global state.
    static Rng child(std::uint64_t seed, std::uint64_t stream) {
        Rng mixer(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
        return Rng(mixer.next_u64());
    }

private:
    std::uint64_t state_;
};

}  // namespace autoscope
