#include "freshsense/caf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace freshsense {

namespace {

void check_input(const IqBuffer& x, const CycleFreqSpec& spec) {
    if (x.empty()) {
        throw std::invalid_argument("estimate_caf: empty buffer");
    }
    if (spec.lag >= x.size()) {
        throw std::invalid_argument("estimate_caf: lag " + std::to_string(spec.lag) +
                                    " >= buffer length " + std::to_string(x.size()));
    }
    if (!(x.sample_rate_hz > 0.0)) {
        throw std::invalid_argument("estimate_caf: buffer has no sample rate");
    }
}

} // namespace

double reduce_mod_sample_rate(double freq_hz, double sample_rate_hz) {
    double r = std::fmod(freq_hz, sample_rate_hz);
    if (r < 0.0) {
        r += sample_rate_hz;
    }
    return r;
}

CafEstimate estimate_caf(const IqBuffer& x, const CycleFreqSpec& spec) {
    check_input(x, spec);
    const std::size_t n_used = x.size() - spec.lag;
    const double f_norm = spec.alpha_hz / x.sample_rate_hz;

    // recursive rotator for e^{-j 2 pi alpha n Ts}, resynced from the sample
    // index every block to kill drift
    constexpr std::size_t kResync = 1024;
    const std::complex<double> step = unit_phasor(-f_norm, 1);
    std::complex<double> rot = {1.0, 0.0};

    std::complex<double> acc = 0.0;
    const std::complex<double>* s = x.samples.data();
    for (std::size_t n = 0; n < n_used; ++n) {
        if (n % kResync == 0) {
            rot = unit_phasor(-f_norm, n);
        }
        const std::complex<double> second =
            spec.conjugate ? s[n + spec.lag] : std::conj(s[n + spec.lag]);
        acc += s[n] * second * rot;
        rot *= step;
    }

    CafEstimate est;
    est.spec = spec;
    est.n_used = n_used;
    est.value = acc / static_cast<double>(n_used);
    return est;
}

CafEstimate estimate_caf_oracle(const IqBuffer& x, const CycleFreqSpec& spec) {
    check_input(x, spec);
    const std::size_t n_used = x.size() - spec.lag;
    const long double f_norm =
        static_cast<long double>(spec.alpha_hz) / static_cast<long double>(x.sample_rate_hz);
    const long double two_pi = 2.0L * 3.14159265358979323846264338327950288L;

    std::complex<long double> acc = 0.0L;
    for (std::size_t n = 0; n < n_used; ++n) {
        const long double turns = std::fmod(f_norm * static_cast<long double>(n), 1.0L);
        const long double angle = -two_pi * turns;
        const std::complex<long double> rot = {std::cos(angle), std::sin(angle)};
        const std::complex<long double> first = x.samples[n];
        std::complex<long double> second = x.samples[n + spec.lag];
        if (!spec.conjugate) {
            second = std::conj(second);
        }
        acc += first * second * rot;
    }
    acc /= static_cast<long double>(n_used);

    CafEstimate est;
    est.spec = spec;
    est.n_used = n_used;
    est.value = {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
    return est;
}

std::vector<CafEstimate> caf_profile(const IqBuffer& x, const std::vector<double>& alphas,
                                     std::size_t lag, bool conjugate) {
    if (alphas.empty()) {
        throw std::invalid_argument("caf_profile: empty alpha list");
    }
    std::vector<CafEstimate> out;
    out.reserve(alphas.size());
    for (double a : alphas) {
        out.push_back(estimate_caf(x, CycleFreqSpec{a, lag, conjugate}));
    }
    return out;
}

CycleFrequencies bpsk_cycle_frequencies(const RadioParams& params, int k_max) {
    params.validate();
    if (k_max < 1) {
        throw std::invalid_argument("bpsk_cycle_frequencies: k_max must be >= 1 "
                                    "(alpha = 0 is ordinary stationarity)");
    }
    const double fs = params.sample_rate_hz;
    const double fc2 = 2.0 * params.carrier_hz;

    auto finish = [fs](std::vector<double>& v) {
        for (double& f : v) {
            f = reduce_mod_sample_rate(f, fs);
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                v.end());
    };

    CycleFrequencies out;
    for (int m = 1; m <= k_max; ++m) {
        out.non_conjugate.push_back(m * params.baud_hz);
        out.non_conjugate.push_back(-m * params.baud_hz);
    }
    for (int m = 0; m <= k_max; ++m) {
        for (double base : {fc2, -fc2}) {
            out.conjugate.push_back(base + m * params.baud_hz);
            out.conjugate.push_back(base - m * params.baud_hz);
        }
    }
    finish(out.non_conjugate);
    finish(out.conjugate);
    return out;
}

} // namespace freshsense
