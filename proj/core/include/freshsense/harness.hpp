#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "freshsense/detector.hpp"
#include "freshsense/energy.hpp"
#include "freshsense/fresh.hpp"
#include "freshsense/sigmodel.hpp"

namespace freshsense {

enum class Method {
    EnergyKnown,     // energy statistic, threshold calibrated at the true noise power
    EnergyUncertain, // energy statistic, threshold set from an uncertainty bound
    CycloDirect,     // cyclostationarity statistic on the received signal
    CycloFresh,      // cyclostationarity statistic on the blind FRESH filter output
};

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

std::vector<double> default_snr_grid(); // 0, -2, ..., -20 dB

// FRESH branches for arbitrary radio parameters: {+-baud} linear and
// {+-2fc, +-(2fc+baud)} conjugate, n_taps each.
FreshConfig fresh_config_for_radio(const RadioParams& params, std::size_t n_taps,
                                   double step_size);

// Full description of one Monte-Carlo experiment. statistic.alphas_hz and
// fresh.branches may be left empty; they are derived from radio at run time.
struct ExperimentSpec {
    RadioParams radio{};
    Method method = Method::CycloFresh;
    std::size_t n_samples = 3200;
    std::vector<double> snr_grid_db = default_snr_grid();
    double pf_target = 0.01;
    std::size_t n_trials = 1000;
    double uncertainty_db = 1.0; // energy-uncertain only
    // Which uncertainty bound sets the energy-uncertain threshold. The robust
    // convention (high bound) is the sweep default; it is the one that
    // produces the SNR wall. See worst_case_pd for the closed-form variant.
    WorstCaseConvention uncertainty_convention = WorstCaseConvention::HighSetsThreshold;
    FreshConfig fresh{{}, 32.0 * 3200.0, 5e-5}; // cyclo-fresh only
    TestStatisticSpec statistic{{}, 0, CombineRule::SumOfMagnitudes};
    std::size_t discard_prefix = 0; // samples dropped before the statistic
    std::size_t calibration_trials = 10000;
    std::uint64_t seed = 1;
    unsigned jobs = 0; // 0 = hardware concurrency

    void derive_defaults(); // fill statistic / fresh branches from radio
    void validate() const;
    std::string pipeline_id() const;    // canonical description of the pipeline
    std::uint64_t pipeline_hash() const; // threshold binding hash
    double calibration_noise_var() const;
};

// One (method, N, SNR) cell of a sweep.
struct SweepRecord {
    std::string method;
    std::size_t n_samples = 0;
    double snr_db = 0.0;
    double pd = 0.0;
    double pf = 0.0;
    double lambda = 0.0;
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRecord> records;
    CalibratedThreshold threshold;
    std::size_t diverged_trials = 0;
    std::size_t total_trials = 0;
};

// Per-trial pipelines, exposed for tests and the acceptance suite. The trial
// consumes its whole stream (data bits first, then noise).
double h0_trial_statistic(const ExperimentSpec& spec, SplitRng& rng);
double h1_trial_statistic(const ExperimentSpec& spec, double snr_db, SplitRng& rng);

// Stream-id layout: calibration trials are streams 0..n-1 (role 0); held-out
// H0 and H1 evaluation trials get (role << 56) | (cell << 32) | trial.
enum class TrialRole : std::uint64_t { Calibration = 0, H0Heldout = 1, H1 = 2 };
std::uint64_t trial_stream_id(TrialRole role, std::size_t cell, std::size_t trial);

// Calibrate the spec's pipeline threshold (streams = role 0 of spec.seed).
CalibratedThreshold calibrate_spec_threshold(const ExperimentSpec& spec);

// Run the sweep. If `calibration` is non-null a matching threshold (by
// pipeline hash) is reused; otherwise one is calibrated first. Each cell runs
// n_trials H1 trials and n_trials held-out H0 trials; diverged trials are
// dropped from the denominators and counted in the result.
SweepResult run_detection_sweep(const ExperimentSpec& spec,
                                const std::vector<CalibratedThreshold>* calibration = nullptr);

// MSE-vs-iterations experiment across an adaptation-gain grid.
struct MseExperimentSpec {
    RadioParams radio{};
    FreshConfig fresh{{}, 32.0 * 3200.0, 5e-5}; // branches derived when empty
    std::vector<double> mu_grid = {5e-6, 5e-5, 5e-4};
    std::size_t n_iterations = 20000;
    std::size_t window = 200;
    double snr_db = 0.0;
    std::uint64_t seed = 1;
    unsigned jobs = 0;
};

struct MseRow {
    double mu = 0.0;
    std::size_t iteration = 0;
    double time_averaged_mse = 0.0;
    bool diverged = false;
};

// One blind run per mu at spec.snr_db; exactly |mu_grid| * n_iterations rows.
// After a divergence the remaining rows of that mu carry diverged = 1.
std::vector<MseRow> run_mse_experiment(const MseExperimentSpec& spec);

// --- file formats -----------------------------------------------------------

// Sweep CSV: header "method,n_samples,snr_db,pd,pf,lambda,n_trials,seed",
// 6-significant-digit values, rows sorted by (method, n_samples, snr_db).
void emit_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path);
std::vector<SweepRecord> parse_csv(const std::filesystem::path& path);

// MSE CSV: header "mu,iteration,time_averaged_mse,diverged".
void emit_mse_csv(const std::vector<MseRow>& rows, const std::filesystem::path& path);

// CAF CSV: header "alpha_hz,lag,re,im,magnitude".
void emit_caf_csv(const std::vector<CafEstimate>& estimates, const std::filesystem::path& path);

// Calibration file: "freshsense-calibration v1" header line, then one record
// per line; pipeline is the last field and runs to end of line.
void save_thresholds(const std::vector<CalibratedThreshold>& thresholds,
                     const std::filesystem::path& path);
std::vector<CalibratedThreshold> load_thresholds(const std::filesystem::path& path);
const CalibratedThreshold* find_threshold(const std::vector<CalibratedThreshold>& thresholds,
                                          std::uint64_t spec_hash);
// Insert or replace by spec_hash.
void upsert_threshold(std::vector<CalibratedThreshold>& thresholds,
                      const CalibratedThreshold& entry);

// Flat key=value experiment config (one pair per line, '#' comments).
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);
// Apply keys onto a spec; throws ConfigError on unknown keys or bad values.
void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv);

// Presets mirroring the reference experiments: paper-fig3/4/5 are detection
// sweeps at N = 800 / 1600 / 3200; paper-fig2 is the MSE experiment.
ExperimentSpec sweep_preset(std::string_view name);
MseExperimentSpec mse_preset(std::string_view name);

} // namespace freshsense
