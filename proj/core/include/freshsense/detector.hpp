#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "freshsense/caf.hpp"
#include "freshsense/rng.hpp"
#include "freshsense/sigmodel.hpp"

namespace freshsense {

// How the complex conjugate-CAF values combine into a real statistic.
// SumOfMagnitudes is the default: it is invariant to the unknown carrier and
// timing phases. MagnitudeOfSum coherently adds the three values first.
enum class CombineRule {
    SumOfMagnitudes,
    MagnitudeOfSum,
};

std::string_view to_string(CombineRule rule);
CombineRule combine_rule_from_string(std::string_view name);

// The cyclostationarity test statistic: conjugate-CAF magnitudes at a small
// set of cyclic frequencies, all at one lag.
struct TestStatisticSpec {
    std::vector<double> alphas_hz;
    std::size_t lag = 0;
    CombineRule combine = CombineRule::SumOfMagnitudes;

    void validate() const;

    // The BPSK triple {2fc, 2fc + baud, 2fc - baud}, reduced into [0, fs).
    static TestStatisticSpec for_radio(const RadioParams& params);
};

// T(y) = combine of conjugate-CAF estimates of y at spec.alphas_hz, spec.lag.
double test_statistic(const IqBuffer& y, const TestStatisticSpec& spec);

// An empirically calibrated constant-false-alarm threshold, bound to the
// pipeline that produced it via spec_hash.
struct CalibratedThreshold {
    double lambda = 0.0;
    double pf_target = 0.0;
    std::size_t n_calibration_trials = 0;
    std::uint64_t spec_hash = 0;
    std::uint64_t seed = 0;
    std::string pipeline;
};

struct DetectorOutcome {
    double statistic = 0.0;
    double lambda = 0.0;
    bool decision = false; // statistic > lambda, strict
};

// Hash binding a threshold to (record length, statistic spec, pipeline name),
// so a threshold calibrated for one configuration cannot silently be reused
// for another.
std::uint64_t detector_spec_hash(std::size_t n_samples, const TestStatisticSpec& spec,
                                 std::string_view pipeline);

// One H0 trial: draw everything from the given stream, run the full pipeline,
// return the statistic.
using H0Statistic = std::function<double(SplitRng&)>;

// Empirical CFAR calibration: n_trials independent H0 trials (trial i uses
// stream i of seed), lambda = the ceil(n_trials * pf_target)-th largest
// statistic. Requires n_trials * pf_target >= 50 so the tail quantile rests
// on enough exceedances.
CalibratedThreshold calibrate_threshold(const H0Statistic& h0, double pf_target,
                                        std::size_t n_trials, std::uint64_t seed,
                                        std::uint64_t spec_hash, std::string pipeline,
                                        unsigned jobs = 0);

// Apply a calibrated threshold. Throws ConfigError when the threshold's hash
// does not match (length of y, spec, threshold's pipeline).
DetectorOutcome decide(const IqBuffer& y, const TestStatisticSpec& spec,
                       const CalibratedThreshold& threshold);

} // namespace freshsense
