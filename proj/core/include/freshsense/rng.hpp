#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace freshsense {

// SplitMix64 output function. Used to derive independent per-trial seeds from
// (master seed, stream id) so trials give the same draws whether they run
// serially or on a thread pool.
inline std::uint64_t splitmix64(std::uint64_t state) {
    std::uint64_t z = state + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic random stream: std::mt19937_64 (bit-exact per the C++
// standard) with explicit uniform and Box-Muller transforms, so the generated
// doubles depend only on (seed, call sequence) and not on the standard
// library's distribution internals.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : engine_(seed) {}

    // Stream k of a master seed: seed the engine with
    // splitmix64(master + (k+1) * 0x9E3779B97F4A7C15).
    static SplitRng for_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
        return SplitRng(splitmix64(master_seed + (stream_id + 1) * 0x9E3779B97F4A7C15ull));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second deviate is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so log() is finite
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Circularly symmetric complex Gaussian with E{|z|^2} = variance.
    std::complex<double> circular_gaussian(double variance) {
        double s = std::sqrt(variance / 2.0);
        double re = gaussian();
        double im = gaussian();
        return {s * re, s * im};
    }

    // Real Gaussian with the full variance on the real part.
    double real_gaussian(double variance) {
        return std::sqrt(variance) * gaussian();
    }

    // Equiprobable +1 / -1.
    int sign() { return (next_u64() >> 63) ? 1 : -1; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace freshsense
