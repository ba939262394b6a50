#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "freshsense/rng.hpp"

namespace freshsense {

// Radio-side parameters of the simulated link. Defaults are the reference
// setup used throughout: 30720 Hz carrier, 3200 baud, sampling at 32x the
// baud rate, unit noise variance.
struct RadioParams {
    double carrier_hz = 30720.0;
    double baud_hz = 3200.0;
    double sample_rate_hz = 32.0 * 3200.0;
    double noise_var = 1.0;
    double snr_db = 0.0;

    // sample_rate_hz must be an integer multiple of baud_hz
    int samples_per_symbol() const;
    void validate() const;
};

// A finite record of complex baseband samples plus its sample rate. Sample n
// sits at time n / sample_rate_hz. The universal signal currency.
struct IqBuffer {
    std::vector<std::complex<double>> samples;
    double sample_rate_hz = 0.0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// e^{j 2 pi f n / fs} evaluated from the integer sample index (phase is
// reduced mod 1 turn before the trig call, so there is no accumulated drift).
std::complex<double> unit_phasor(double cycles_per_sample, std::uint64_t n);

// Amplitude A with A^2 = noise_var * 10^(snr_db/10), i.e. the constant
// envelope that realizes the requested SNR against the given noise power.
double snr_to_amplitude(double snr_db, double noise_var);

// Complex BPSK: x(n) = A * c_{floor(n/S)} * e^{j 2 pi fc n Ts} with c = +/-1
// equiprobable i.i.d., S = samples per symbol, symbol boundaries at sample 0,
// zero carrier phase offset.
IqBuffer gen_bpsk(const RadioParams& params, std::size_t n_samples, double amplitude,
                  SplitRng& rng);

// AWGN record. complex_noise=true: circularly symmetric with per-component
// variance noise_var/2 so E{|w|^2} = noise_var. complex_noise=false: real
// samples of variance noise_var (zero imaginary part).
IqBuffer gen_awgn(std::size_t n_samples, double noise_var, double sample_rate_hz,
                  SplitRng& rng, bool complex_noise = true);

// Element-wise sum; lengths and sample rates must match.
IqBuffer add(const IqBuffer& a, const IqBuffer& b);

} // namespace freshsense
