#pragma once

#include <cstddef>
#include <utility>

#include "freshsense/sigmodel.hpp"

namespace freshsense {

struct EnergyDetectorParams {
    std::size_t n_samples = 1;
    double noise_var = 1.0;
    double signal_var = 0.0;
    double uncertainty_db = 0.0;
    void validate() const;
};

// sum_n |r(n)|^2
double energy_statistic(const IqBuffer& r);

// Standard Gaussian tail Q(x) = P(Z > x), via erfc. Absolute error is that of
// erfc, well below 1e-12 on |x| <= 8.
double q_function(double x);

// Inverse of q_function on (0, 1), by bisection to ~1e-13 in x.
double q_inverse(double p);

// Gaussian-approximation false-alarm probability of the energy detector:
// Q((lambda - N sigma_w^2) / sqrt(2 N sigma_w^4)). The 2N sigma^4 variance is
// exact for real Gaussian samples; for circular complex noise the true
// variance of the statistic is N sigma^4 (see worst-case notes in the README;
// Monte-Carlo sweeps calibrate thresholds empirically and do not rely on it).
double closed_form_pf(double lambda, std::size_t n, double noise_var);

// Companion detection probability:
// Q((lambda - N (sigma_w^2 + sigma_x^2)) / sqrt(2 N (sigma_w^2 + sigma_x^2)^2)).
double closed_form_pd(double lambda, std::size_t n, double noise_var, double signal_var);

// Invert closed_form_pf for lambda:
// lambda = N sigma_w^2 + Qinv(pf) sqrt(2 N sigma_w^4).
double threshold_for_pf(double pf, std::size_t n, double noise_var);

// Noise-variance uncertainty of a dB:
// low = sigma_w^2 10^(-a/10), high = sigma_w^2 10^(a/10).
struct UncertaintyBounds {
    double low = 0.0;
    double high = 0.0;
};
UncertaintyBounds uncertainty_bounds(double noise_var, double a_db);

// Which end of the uncertainty interval fixes the threshold.
// LowSetsThreshold composes the closed forms exactly as stated alongside
// Eq.-style uncertainty modeling (threshold from the low bound, Pd evaluated
// at the high bound). HighSetsThreshold is the robust convention that
// guarantees the false-alarm target over the whole interval; it is what the
// Monte-Carlo sweeps use, since it is the convention under which the SNR wall
// appears.
enum class WorstCaseConvention {
    LowSetsThreshold,
    HighSetsThreshold,
};

double worst_case_pd(double pf, std::size_t n, double noise_var, double signal_var,
                     double a_db,
                     WorstCaseConvention convention = WorstCaseConvention::LowSetsThreshold);

} // namespace freshsense
