#include "freshsense/sigmodel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "freshsense/errors.hpp"

namespace freshsense {

int RadioParams::samples_per_symbol() const {
    double ratio = sample_rate_hz / baud_hz;
    double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
        throw std::invalid_argument("sample_rate_hz must be an integer multiple of baud_hz, got ratio " +
                                    std::to_string(ratio));
    }
    return static_cast<int>(rounded);
}

void RadioParams::validate() const {
    if (!(carrier_hz > 0.0) || !(baud_hz > 0.0) || !(sample_rate_hz > 0.0)) {
        throw std::invalid_argument("RadioParams: frequencies must be positive");
    }
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("RadioParams: noise_var must be positive");
    }
    (void)samples_per_symbol();
}

std::complex<double> unit_phasor(double cycles_per_sample, std::uint64_t n) {
    double turns = std::fmod(cycles_per_sample * static_cast<double>(n), 1.0);
    double angle = 2.0 * M_PI * turns;
    return {std::cos(angle), std::sin(angle)};
}

double snr_to_amplitude(double snr_db, double noise_var) {
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("snr_to_amplitude: noise_var must be positive");
    }
    return std::sqrt(noise_var * std::pow(10.0, snr_db / 10.0));
}

IqBuffer gen_bpsk(const RadioParams& params, std::size_t n_samples, double amplitude,
                  SplitRng& rng) {
    params.validate();
    const int sps = params.samples_per_symbol();
    const double f_norm = params.carrier_hz / params.sample_rate_hz;

    IqBuffer out;
    out.sample_rate_hz = params.sample_rate_hz;
    out.samples.resize(n_samples);

    double symbol = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        if (n % static_cast<std::size_t>(sps) == 0) {
            symbol = static_cast<double>(rng.sign());
        }
        out.samples[n] = amplitude * symbol * unit_phasor(f_norm, n);
    }
    return out;
}

IqBuffer gen_awgn(std::size_t n_samples, double noise_var, double sample_rate_hz,
                  SplitRng& rng, bool complex_noise) {
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("gen_awgn: noise_var must be positive");
    }
    IqBuffer out;
    out.sample_rate_hz = sample_rate_hz;
    out.samples.resize(n_samples);
    if (complex_noise) {
        for (auto& s : out.samples) {
            s = rng.circular_gaussian(noise_var);
        }
    } else {
        for (auto& s : out.samples) {
            s = {rng.real_gaussian(noise_var), 0.0};
        }
    }
    return out;
}

IqBuffer add(const IqBuffer& a, const IqBuffer& b) {
    if (a.size() != b.size()) {
        throw ShapeError("add: length mismatch (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.sample_rate_hz != b.sample_rate_hz) {
        throw ShapeError("add: sample rate mismatch");
    }
    IqBuffer out;
    out.sample_rate_hz = a.sample_rate_hz;
    out.samples.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.samples[i] = a.samples[i] + b.samples[i];
    }
    return out;
}

} // namespace freshsense
