// freshsense: cyclostationary spectrum-sensing experiments from the command
// line. Subcommands: caf (CAF profile dump), mse (LMS convergence trace),
// calibrate (CFAR threshold management), sweep (detection-probability curves).
//
// Exit codes: 0 success, 2 configuration error, 3 divergence-dominated run
// (more than 1% of trials aborted), 4 I/O failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "freshsense/errors.hpp"
#include "freshsense/harness.hpp"

namespace fs = freshsense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_snr_grid(const std::string& text) {
    // "start:step:stop" or a comma list
    if (text.find(':') != std::string::npos) {
        double start = 0.0, step = 0.0, stop = 0.0;
        if (std::sscanf(text.c_str(), "%lg:%lg:%lg", &start, &step, &stop) != 3 ||
            step == 0.0) {
            throw fs::ConfigError("bad --snr-grid, expected start:step:stop, got " + text);
        }
        std::vector<double> grid;
        if (step > 0.0) {
            for (double v = start; v <= stop + 1e-9; v += step) {
                grid.push_back(v);
            }
        } else {
            for (double v = start; v >= stop - 1e-9; v += step) {
                grid.push_back(v);
            }
        }
        if (grid.empty()) {
            throw fs::ConfigError("empty --snr-grid: " + text);
        }
        return grid;
    }
    std::vector<double> grid;
    std::string field;
    std::istringstream ss(text);
    while (std::getline(ss, field, ',')) {
        grid.push_back(std::stod(field));
    }
    return grid;
}

struct SpecOptions {
    std::string config_path;
    std::string preset;
    std::string method = "all";
    std::string snr_grid;
    std::string combine;
    std::string convention;

    void attach(CLI::App& cmd, fs::ExperimentSpec& spec, bool with_sweep_opts) {
        cmd.add_option("--config", config_path,
                       "key=value experiment config file (flags override it)");
        if (with_sweep_opts) {
            cmd.add_option("--preset", preset,
                           "paper-fig3|paper-fig4|paper-fig5 (N = 800/1600/3200)");
            cmd.add_option("--method", method,
                           "energy-known|energy-uncertain|cyclo-direct|cyclo-fresh|all");
            cmd.add_option("--snr-grid", snr_grid, "start:step:stop or comma list, dB");
            cmd.add_option("--trials", spec.n_trials, "Monte-Carlo trials per grid cell");
        }
        cmd.add_option("--n-samples", spec.n_samples, "samples per trial");
        cmd.add_option("--pf", spec.pf_target, "false-alarm target");
        cmd.add_option("--calibration-trials", spec.calibration_trials,
                       "H0 trials used to calibrate thresholds");
        cmd.add_option("--uncertainty-db", spec.uncertainty_db,
                       "noise-variance uncertainty for energy-uncertain, dB");
        cmd.add_option("--convention", convention,
                       "energy-uncertain threshold convention: "
                       "high-sets-threshold (default) or low-sets-threshold");
        cmd.add_option("--lag", spec.statistic.lag, "CAF lag of the test statistic");
        cmd.add_option("--combine", combine, "sum-of-magnitudes|magnitude-of-sum");
        cmd.add_option("--discard-prefix", spec.discard_prefix,
                       "samples dropped before computing the statistic");
        cmd.add_option("--step-size", spec.fresh.step_size, "LMS adaptation gain mu");
        cmd.add_option("--carrier-hz", spec.radio.carrier_hz, "carrier frequency");
        cmd.add_option("--baud-hz", spec.radio.baud_hz, "symbol rate");
        cmd.add_option("--sample-rate-hz", spec.radio.sample_rate_hz, "sample rate");
        cmd.add_option("--noise-var", spec.radio.noise_var, "noise variance");
        cmd.add_option("--seed", spec.seed, "master seed");
        cmd.add_option("--jobs", spec.jobs, "worker threads (0 = hardware)");
    }

    // order: preset, then config file, then explicit flags (CLI11 already
    // wrote flag values into spec, so re-apply the ones we hold as strings)
    void finish(fs::ExperimentSpec& spec) {
        if (!config_path.empty()) {
            fs::apply_config(spec, fs::load_config_file(config_path));
        }
        if (!snr_grid.empty()) {
            spec.snr_grid_db = parse_snr_grid(snr_grid);
        }
        if (!combine.empty()) {
            spec.statistic.combine = fs::combine_rule_from_string(combine);
        }
        if (!convention.empty()) {
            if (convention == "high-sets-threshold") {
                spec.uncertainty_convention = fs::WorstCaseConvention::HighSetsThreshold;
            } else if (convention == "low-sets-threshold") {
                spec.uncertainty_convention = fs::WorstCaseConvention::LowSetsThreshold;
            } else {
                throw fs::ConfigError("bad --convention: " + convention);
            }
        }
    }
};

std::vector<fs::Method> methods_to_run(const std::string& name) {
    if (name == "all") {
        return {fs::Method::EnergyKnown, fs::Method::EnergyUncertain,
                fs::Method::CycloDirect, fs::Method::CycloFresh};
    }
    return {fs::method_from_string(name)};
}

int run_caf(std::uint64_t seed, std::size_t n_samples, double snr_db, bool noise_only,
            std::size_t lag, bool non_conjugate, double alpha_start, double alpha_stop,
            double alpha_step, const std::vector<double>& alphas_explicit,
            const fs::RadioParams& radio, const std::string& out) {
    fs::SplitRng rng = fs::SplitRng::for_stream(seed, 0);
    fs::IqBuffer r;
    if (noise_only) {
        r = fs::gen_awgn(n_samples, radio.noise_var, radio.sample_rate_hz, rng);
    } else {
        const double amp = fs::snr_to_amplitude(snr_db, radio.noise_var);
        fs::IqBuffer x = fs::gen_bpsk(radio, n_samples, amp, rng);
        fs::IqBuffer w = fs::gen_awgn(n_samples, radio.noise_var, radio.sample_rate_hz, rng);
        r = fs::add(x, w);
    }

    std::vector<double> alphas = alphas_explicit;
    if (alphas.empty()) {
        if (alpha_step <= 0.0 || alpha_stop < alpha_start) {
            throw fs::ConfigError("bad alpha grid");
        }
        for (double a = alpha_start; a <= alpha_stop + 1e-9; a += alpha_step) {
            alphas.push_back(a);
        }
    }
    const auto profile = fs::caf_profile(r, alphas, lag, !non_conjugate);
    fs::emit_caf_csv(profile, out);
    std::cerr << "caf: wrote " << profile.size() << " rows to " << out << "\n";
    return kExitOk;
}

int run_mse(const std::string& preset, fs::MseExperimentSpec spec, const std::string& out) {
    if (!preset.empty()) {
        fs::MseExperimentSpec base = fs::mse_preset(preset);
        base.seed = spec.seed;
        base.jobs = spec.jobs;
        spec = base;
    }
    const auto rows = fs::run_mse_experiment(spec);
    fs::emit_mse_csv(rows, out);
    std::size_t diverged = 0;
    for (const auto& r : rows) {
        diverged += r.diverged ? 1 : 0;
    }
    std::cerr << "mse: wrote " << rows.size() << " rows to " << out << "\n";
    if (diverged > 0) {
        std::cerr << "mse: " << diverged << " diverged rows flagged\n";
    }
    return kExitOk;
}

int run_calibrate(fs::ExperimentSpec spec, const std::string& method,
                  const std::string& cal_path) {
    std::vector<fs::CalibratedThreshold> table;
    if (std::filesystem::exists(cal_path)) {
        table = fs::load_thresholds(cal_path);
    }
    for (fs::Method m : methods_to_run(method)) {
        spec.method = m;
        fs::ExperimentSpec derived = spec;
        derived.derive_defaults();
        const fs::CalibratedThreshold thr = fs::calibrate_spec_threshold(derived);
        fs::upsert_threshold(table, thr);
        std::cerr << "calibrate: " << thr.pipeline << "\n  lambda=" << thr.lambda
                  << " pf=" << thr.pf_target << " trials=" << thr.n_calibration_trials
                  << "\n";
    }
    fs::save_thresholds(table, cal_path);
    std::cerr << "calibrate: saved " << table.size() << " records to " << cal_path << "\n";
    return kExitOk;
}

int run_sweep(fs::ExperimentSpec spec, const std::string& method,
              const std::string& cal_path, const std::string& out) {
    std::vector<fs::CalibratedThreshold> table;
    const bool have_cal_file = !cal_path.empty() && std::filesystem::exists(cal_path);
    if (have_cal_file) {
        table = fs::load_thresholds(cal_path);
    }

    std::vector<fs::SweepRecord> records;
    std::size_t diverged = 0, total = 0;
    bool table_dirty = false;
    for (fs::Method m : methods_to_run(method)) {
        fs::ExperimentSpec ms = spec;
        ms.method = m;
        ms.derive_defaults();
        const std::uint64_t hash = ms.pipeline_hash();
        fs::SweepResult res;
        if (fs::find_threshold(table, hash) != nullptr) {
            res = fs::run_detection_sweep(ms, &table);
        } else {
            std::cerr << "sweep: calibrating " << fs::to_string(m) << " ("
                      << ms.calibration_trials << " H0 trials)\n";
            res = fs::run_detection_sweep(ms);
            fs::upsert_threshold(table, res.threshold);
            table_dirty = true;
        }
        std::cerr << "sweep: " << fs::to_string(m) << " lambda=" << res.threshold.lambda
                  << "\n";
        records.insert(records.end(), res.records.begin(), res.records.end());
        diverged += res.diverged_trials;
        total += res.total_trials;
    }

    fs::emit_csv(records, out);
    std::cerr << "sweep: wrote " << records.size() << " records to " << out << "\n";
    if (!cal_path.empty() && table_dirty) {
        fs::save_thresholds(table, cal_path);
        std::cerr << "sweep: updated calibration file " << cal_path << "\n";
    }
    if (total > 0 && static_cast<double>(diverged) > 0.01 * static_cast<double>(total)) {
        std::cerr << "sweep: " << diverged << "/" << total
                  << " trials diverged (> 1%), run is unreliable\n";
        return kExitDivergence;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclostationary spectrum sensing: FRESH filtering, CAF statistics, "
                 "energy-detector baselines and Monte-Carlo sweeps"};
    app.require_subcommand(1);

    // --- caf ---
    auto* caf = app.add_subcommand("caf", "dump a cyclic-autocorrelation profile as CSV");
    std::uint64_t caf_seed = 1;
    std::size_t caf_n = 32000;
    double caf_snr = 20.0;
    bool caf_noise_only = false, caf_non_conj = false;
    std::size_t caf_lag = 0;
    double a_start = 54940.0, a_stop = 68040.0, a_step = 100.0;
    std::vector<double> caf_alphas;
    fs::RadioParams caf_radio;
    std::string caf_out;
    caf->add_option("--seed", caf_seed, "master seed");
    caf->add_option("--n-samples", caf_n, "record length");
    caf->add_option("--snr-db", caf_snr, "signal SNR (ignored with --noise-only)");
    caf->add_flag("--noise-only", caf_noise_only, "H0 record: noise, no signal");
    caf->add_option("--lag", caf_lag, "lag k");
    caf->add_flag("--non-conjugate", caf_non_conj, "plain CAF instead of conjugate CAF");
    caf->add_option("--alpha-start", a_start, "grid start, Hz");
    caf->add_option("--alpha-stop", a_stop, "grid stop, Hz");
    caf->add_option("--alpha-step", a_step, "grid step, Hz");
    caf->add_option("--alphas", caf_alphas, "explicit cyclic frequencies, Hz")
        ->delimiter(',');
    caf->add_option("--carrier-hz", caf_radio.carrier_hz, "carrier frequency");
    caf->add_option("--baud-hz", caf_radio.baud_hz, "symbol rate");
    caf->add_option("--sample-rate-hz", caf_radio.sample_rate_hz, "sample rate");
    caf->add_option("--noise-var", caf_radio.noise_var, "noise variance");
    caf->add_option("--out", caf_out, "output CSV path")->required();

    // --- mse ---
    auto* mse = app.add_subcommand("mse", "FRESH LMS convergence experiment");
    fs::MseExperimentSpec mse_spec;
    std::string mse_preset_name, mse_out;
    mse->add_option("--preset", mse_preset_name, "paper-fig2");
    mse->add_option("--mu-grid", mse_spec.mu_grid, "adaptation gains")->delimiter(',');
    mse->add_option("--iterations", mse_spec.n_iterations, "samples per run");
    mse->add_option("--window", mse_spec.window, "time-averaging window");
    mse->add_option("--snr-db", mse_spec.snr_db, "signal SNR");
    mse->add_option("--carrier-hz", mse_spec.radio.carrier_hz, "carrier frequency");
    mse->add_option("--baud-hz", mse_spec.radio.baud_hz, "symbol rate");
    mse->add_option("--sample-rate-hz", mse_spec.radio.sample_rate_hz, "sample rate");
    mse->add_option("--noise-var", mse_spec.radio.noise_var, "noise variance");
    mse->add_option("--seed", mse_spec.seed, "master seed");
    mse->add_option("--jobs", mse_spec.jobs, "worker threads (0 = hardware)");
    mse->add_option("--out", mse_out, "output CSV path")->required();

    // --- calibrate ---
    auto* cal = app.add_subcommand("calibrate", "calibrate CFAR thresholds");
    fs::ExperimentSpec cal_spec;
    SpecOptions cal_opts;
    std::string cal_file;
    cal_opts.method = "cyclo-fresh";
    cal_opts.attach(*cal, cal_spec, false);
    cal->add_option("--method", cal_opts.method,
                    "energy-known|energy-uncertain|cyclo-direct|cyclo-fresh|all");
    cal->add_option("--calibration-file", cal_file, "calibration records file")->required();

    // --- sweep ---
    auto* sweep = app.add_subcommand("sweep", "detection-probability sweep over SNR");
    fs::ExperimentSpec sweep_spec;
    SpecOptions sweep_opts;
    std::string sweep_cal_file, sweep_out;
    sweep_opts.attach(*sweep, sweep_spec, true);
    sweep->add_option("--calibration-file", sweep_cal_file,
                      "reuse/store thresholds in this file");
    sweep->add_option("--out", sweep_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (caf->parsed()) {
            return run_caf(caf_seed, caf_n, caf_snr, caf_noise_only, caf_lag, caf_non_conj,
                           a_start, a_stop, a_step, caf_alphas, caf_radio, caf_out);
        }
        if (mse->parsed()) {
            return run_mse(mse_preset_name, mse_spec, mse_out);
        }
        if (cal->parsed()) {
            cal_opts.finish(cal_spec);
            return run_calibrate(cal_spec, cal_opts.method, cal_file);
        }
        if (sweep->parsed()) {
            if (!sweep_opts.preset.empty()) {
                fs::ExperimentSpec base = fs::sweep_preset(sweep_opts.preset);
                // keep CLI-provided seed/jobs/trial counts if the user set them
                base.seed = sweep_spec.seed;
                base.jobs = sweep_spec.jobs;
                if (sweep->count("--trials")) {
                    base.n_trials = sweep_spec.n_trials;
                }
                if (sweep->count("--calibration-trials")) {
                    base.calibration_trials = sweep_spec.calibration_trials;
                }
                if (sweep->count("--n-samples")) {
                    base.n_samples = sweep_spec.n_samples;
                }
                sweep_spec = base;
            }
            sweep_opts.finish(sweep_spec);
            return run_sweep(sweep_spec, sweep_opts.method, sweep_cal_file, sweep_out);
        }
    } catch (const fs::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        // invalid parameters, config errors, calibration mismatches
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
