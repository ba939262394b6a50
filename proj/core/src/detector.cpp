#include "freshsense/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "freshsense/errors.hpp"
#include "freshsense/hash.hpp"
#include "freshsense/parallel.hpp"

namespace freshsense {

std::string_view to_string(CombineRule rule) {
    switch (rule) {
    case CombineRule::SumOfMagnitudes:
        return "sum-of-magnitudes";
    case CombineRule::MagnitudeOfSum:
        return "magnitude-of-sum";
    }
    return "?";
}

CombineRule combine_rule_from_string(std::string_view name) {
    if (name == "sum-of-magnitudes") {
        return CombineRule::SumOfMagnitudes;
    }
    if (name == "magnitude-of-sum") {
        return CombineRule::MagnitudeOfSum;
    }
    throw ConfigError("unknown combine rule: " + std::string(name));
}

void TestStatisticSpec::validate() const {
    if (alphas_hz.empty()) {
        throw std::invalid_argument("TestStatisticSpec: at least one cyclic frequency required");
    }
}

TestStatisticSpec TestStatisticSpec::for_radio(const RadioParams& params) {
    params.validate();
    const double fs = params.sample_rate_hz;
    const double fc2 = 2.0 * params.carrier_hz;
    TestStatisticSpec spec;
    spec.alphas_hz = {
        reduce_mod_sample_rate(fc2, fs),
        reduce_mod_sample_rate(fc2 + params.baud_hz, fs),
        reduce_mod_sample_rate(fc2 - params.baud_hz, fs),
    };
    return spec;
}

double test_statistic(const IqBuffer& y, const TestStatisticSpec& spec) {
    spec.validate();
    if (spec.combine == CombineRule::SumOfMagnitudes) {
        double t = 0.0;
        for (double alpha : spec.alphas_hz) {
            t += std::abs(estimate_caf(y, CycleFreqSpec{alpha, spec.lag, true}).value);
        }
        return t;
    }
    std::complex<double> sum = 0.0;
    for (double alpha : spec.alphas_hz) {
        sum += estimate_caf(y, CycleFreqSpec{alpha, spec.lag, true}).value;
    }
    return std::abs(sum);
}

std::uint64_t detector_spec_hash(std::size_t n_samples, const TestStatisticSpec& spec,
                                 std::string_view pipeline) {
    char buf[96];
    std::string canon = "detector-v1|";
    canon += pipeline;
    std::snprintf(buf, sizeof buf, "|n=%zu|lag=%zu|combine=%d", n_samples, spec.lag,
                  static_cast<int>(spec.combine));
    canon += buf;
    for (double a : spec.alphas_hz) {
        std::snprintf(buf, sizeof buf, "|a=%.17g", a);
        canon += buf;
    }
    return fnv1a64(canon);
}

CalibratedThreshold calibrate_threshold(const H0Statistic& h0, double pf_target,
                                        std::size_t n_trials, std::uint64_t seed,
                                        std::uint64_t spec_hash, std::string pipeline,
                                        unsigned jobs) {
    if (!(pf_target > 0.0) || !(pf_target < 1.0)) {
        throw std::invalid_argument("calibrate_threshold: pf_target must lie in (0, 1)");
    }
    if (static_cast<double>(n_trials) * pf_target < 50.0) {
        throw std::invalid_argument(
            "calibrate_threshold: need n_trials * pf_target >= 50 for a stable quantile");
    }

    std::vector<double> stats(n_trials);
    parallel_for(n_trials, jobs, [&](std::size_t i) {
        SplitRng rng = SplitRng::for_stream(seed, i);
        stats[i] = h0(rng);
    });

    // lambda = k-th largest with k = ceil(n_trials * pf_target)
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n_trials) * pf_target));
    std::nth_element(stats.begin(), stats.begin() + (k - 1), stats.end(),
                     std::greater<double>());

    CalibratedThreshold out;
    out.lambda = stats[k - 1];
    out.pf_target = pf_target;
    out.n_calibration_trials = n_trials;
    out.spec_hash = spec_hash;
    out.seed = seed;
    out.pipeline = std::move(pipeline);
    return out;
}

DetectorOutcome decide(const IqBuffer& y, const TestStatisticSpec& spec,
                       const CalibratedThreshold& threshold) {
    const std::uint64_t expected = detector_spec_hash(y.size(), spec, threshold.pipeline);
    if (expected != threshold.spec_hash) {
        throw ConfigError(
            "decide: threshold was calibrated for a different (record length, statistic, "
            "pipeline) configuration");
    }
    DetectorOutcome out;
    out.statistic = test_statistic(y, spec);
    out.lambda = threshold.lambda;
    out.decision = out.statistic > threshold.lambda;
    return out;
}

} // namespace freshsense
