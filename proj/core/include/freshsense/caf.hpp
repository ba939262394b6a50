#pragma once

#include <cstddef>
#include <vector>

#include "freshsense/sigmodel.hpp"

namespace freshsense {

// One point of the cyclic-autocorrelation plane.
//
// Naming convention (the literature is inconsistent, so it is pinned here):
// conjugate == false selects the plain CAF, which conjugates the second
// factor, i.e. averages x(n) * conj(x(n+k)) * e^{-j 2 pi alpha n Ts}.
// conjugate == true selects the conjugate CAF R_{xx*}, which correlates
// x(n) * x(n+k) with no conjugation anywhere. The conjugate CAF is the one
// that exposes the carrier-family cycle frequencies (2 fc +/- m/T0) of BPSK.
struct CycleFreqSpec {
    double alpha_hz = 0.0;
    std::size_t lag = 0;
    bool conjugate = false;
};

struct CafEstimate {
    CycleFreqSpec spec;
    std::complex<double> value;
    std::size_t n_used = 0; // number of product terms, N - lag
};

// Reduce a (possibly negative) frequency into [0, sample_rate).
double reduce_mod_sample_rate(double freq_hz, double sample_rate_hz);

// Lag-truncated cyclic autocorrelation estimate, normalized by the number of
// product terms:
//   (1/(N-k)) * sum_{n=0}^{N-1-k} x(n) * g(x(n+k)) * e^{-j 2 pi alpha n Ts}
// with g = conj for the plain CAF and g = identity for the conjugate CAF.
// No zero padding, no circular wraparound.
CafEstimate estimate_caf(const IqBuffer& x, const CycleFreqSpec& spec);

// Reference implementation: same contract, term-by-term summation in long
// double with the exponential recomputed from n every term. Kept free of the
// rotator recurrence the fast path uses, so the two are independent routes.
CafEstimate estimate_caf_oracle(const IqBuffer& x, const CycleFreqSpec& spec);

// estimate_caf applied across an alpha grid, order preserved.
std::vector<CafEstimate> caf_profile(const IqBuffer& x, const std::vector<double>& alphas,
                                     std::size_t lag, bool conjugate);

// Cycle frequencies of the complex BPSK model, reduced into [0, fs), sorted,
// deduplicated. Non-conjugate: +/- m/T0 for 1 <= m <= k_max. Conjugate:
// +/- 2 fc +/- m/T0 for 0 <= m <= k_max.
struct CycleFrequencies {
    std::vector<double> non_conjugate;
    std::vector<double> conjugate;
};
CycleFrequencies bpsk_cycle_frequencies(const RadioParams& params, int k_max);

} // namespace freshsense
