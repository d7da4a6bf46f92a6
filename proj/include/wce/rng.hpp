#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace wce {

// splitmix64: tiny, splittable, and fully specified, so streams derived from
// (seed, index) are identical on every platform and for any worker layout.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1), never exactly 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Derive an independent stream for (seed, stream_index).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
    return mix.next_u64();
}

// Standard normal variates via Box-Muller on splitmix64 uniforms.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.next_uniform();
        const double u2 = rng_.next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace wce
