#include "freshsense/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace freshsense {

void EnergyDetectorParams::validate() const {
    if (n_samples < 1) {
        throw std::invalid_argument("EnergyDetectorParams: n_samples must be >= 1");
    }
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("EnergyDetectorParams: noise_var must be positive");
    }
    if (signal_var < 0.0 || uncertainty_db < 0.0) {
        throw std::invalid_argument("EnergyDetectorParams: signal_var and uncertainty_db must be >= 0");
    }
}

double energy_statistic(const IqBuffer& r) {
    double acc = 0.0;
    for (const auto& s : r.samples) {
        acc += s.real() * s.real() + s.imag() * s.imag();
    }
    return acc;
}

double q_function(double x) {
    return 0.5 * std::erfc(x / M_SQRT2);
}

double q_inverse(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::invalid_argument("q_inverse: p must lie in (0, 1)");
    }
    // Q is strictly decreasing; bracket generously and bisect.
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-14 * std::max(1.0, std::abs(lo))) {
            break;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

void check_nv(std::size_t n, double noise_var, const char* who) {
    if (n < 1) {
        throw std::invalid_argument(std::string(who) + ": n must be >= 1");
    }
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument(std::string(who) + ": noise_var must be positive");
    }
}

} // namespace

double closed_form_pf(double lambda, std::size_t n, double noise_var) {
    check_nv(n, noise_var, "closed_form_pf");
    const double nn = static_cast<double>(n);
    return q_function((lambda - nn * noise_var) / std::sqrt(2.0 * nn * noise_var * noise_var));
}

double closed_form_pd(double lambda, std::size_t n, double noise_var, double signal_var) {
    check_nv(n, noise_var, "closed_form_pd");
    if (signal_var < 0.0) {
        throw std::invalid_argument("closed_form_pd: signal_var must be >= 0");
    }
    const double nn = static_cast<double>(n);
    const double total = noise_var + signal_var;
    return q_function((lambda - nn * total) / std::sqrt(2.0 * nn * total * total));
}

double threshold_for_pf(double pf, std::size_t n, double noise_var) {
    check_nv(n, noise_var, "threshold_for_pf");
    const double nn = static_cast<double>(n);
    return nn * noise_var + q_inverse(pf) * std::sqrt(2.0 * nn * noise_var * noise_var);
}

UncertaintyBounds uncertainty_bounds(double noise_var, double a_db) {
    if (a_db < 0.0) {
        throw std::invalid_argument("uncertainty_bounds: a_db must be >= 0");
    }
    return {noise_var * std::pow(10.0, -a_db / 10.0), noise_var * std::pow(10.0, a_db / 10.0)};
}

double worst_case_pd(double pf, std::size_t n, double noise_var, double signal_var,
                     double a_db, WorstCaseConvention convention) {
    const UncertaintyBounds b = uncertainty_bounds(noise_var, a_db);
    if (convention == WorstCaseConvention::LowSetsThreshold) {
        const double lambda = threshold_for_pf(pf, n, b.low);
        return closed_form_pd(lambda, n, b.high, signal_var);
    }
    const double lambda = threshold_for_pf(pf, n, b.high);
    return closed_form_pd(lambda, n, b.low, signal_var);
}

} // namespace freshsense
