#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "freshsense/sigmodel.hpp"

namespace freshsense {

// One branch of the filter: a frequency shifter at shift_hz (optionally
// applied to the conjugated input) feeding an n_taps FIR filter.
struct BranchSpec {
    double shift_hz = 0.0;
    bool conjugate = false;
    std::size_t n_taps = 64;
};

struct FreshConfig {
    std::vector<BranchSpec> branches;
    double sample_rate_hz = 32.0 * 3200.0;
    double step_size = 5e-5; // LMS gain mu; 0 freezes the weights

    void validate() const;
    std::size_t total_taps() const;
    std::uint64_t hash() const; // binds snapshots/thresholds to this config

    // The six-branch reference configuration: +/- baud linear branches and
    // +/- 2fc, +/- (2fc + baud) conjugate branches, 64 taps each, mu = 5e-5.
    static FreshConfig paper_default();
};

// Live filter state. weights is the concatenated weight vector, branch b
// occupying [offsets[b], offsets[b] + n_taps). delay holds the per-branch
// ring buffers of frequency-shifted input samples in the same layout.
struct FreshState {
    std::vector<std::complex<double>> weights;
    std::vector<std::complex<double>> delay;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> heads;
    std::vector<std::complex<double>> rotators;  // e^{j 2 pi shift n Ts}, current n
    std::vector<std::complex<double>> rot_steps; // per-sample rotator multiplier
    std::uint64_t sample_index = 0;

    explicit FreshState(const FreshConfig& config);
};

// Frequency-shifted branch input for sample index n:
//   non-conjugate: x * e^{j 2 pi shift n Ts}
//   conjugate:     conj(x) * e^{j 2 pi shift n Ts}
std::complex<double> branch_input(std::complex<double> x, const BranchSpec& spec,
                                  std::uint64_t n, double sample_rate_hz);

// Push x through every branch and return the filter output
//   y(n) = sum_b sum_t w_{b,t} u_b(n - t)
// where u_b is that branch's frequency-shifted input. Advances the state.
std::complex<double> filter_sample(FreshState& state, const FreshConfig& config,
                                   std::complex<double> x);

struct LmsOutput {
    std::complex<double> y;
    std::complex<double> err;
};

// One output + adaptation step against the training sample d:
//   err = d - y(n),  w <- w + mu * err * conj(u)
// per weight, with u the matching entry of the frequency-shifted delay line
// (the stochastic-gradient step for the filter output above). Throws
// DivergenceError when the output leaves the finite range.
LmsOutput lms_step(FreshState& state, const FreshConfig& config,
                   std::complex<double> x, std::complex<double> d);

struct MseTrace {
    std::vector<double> squared_error; // |err(n)|^2 per sample
    std::size_t window = 200;          // default smoothing window
};

// Causal sliding-window mean: out[i] averages v[max(0, i-window+1) .. i].
std::vector<double> windowed_average(const std::vector<double>& v, std::size_t window);

struct BlindRunResult {
    IqBuffer output;
    MseTrace trace;
    FreshState final_state;
    std::optional<std::size_t> diverged_at; // set instead of throwing (see below)
};

// Blind adaptation over a whole record: d(n) = x(n), weights start at zero.
// run_blind throws DivergenceError; run_blind_partial instead stops early and
// reports the sample index, keeping the partial trace (used by the MSE
// experiment to flag diverged rows).
BlindRunResult run_blind(const IqBuffer& x, const FreshConfig& config);
BlindRunResult run_blind_partial(const IqBuffer& x, const FreshConfig& config);

// Snapshot format: a small text header (config hash, sample index, weight
// count) followed by one "re im" line per weight. Delay lines are not part of
// a snapshot; a resumed filter restarts with a flushed delay line.
void save_state(const FreshState& state, const FreshConfig& config, std::ostream& os);
FreshState load_state(const FreshConfig& config, std::istream& is);

} // namespace freshsense
