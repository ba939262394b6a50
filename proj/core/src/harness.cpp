#include "freshsense/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "freshsense/errors.hpp"
#include "freshsense/hash.hpp"
#include "freshsense/parallel.hpp"

namespace freshsense {

std::string_view to_string(Method m) {
    switch (m) {
    case Method::EnergyKnown:
        return "energy-known";
    case Method::EnergyUncertain:
        return "energy-uncertain";
    case Method::CycloDirect:
        return "cyclo-direct";
    case Method::CycloFresh:
        return "cyclo-fresh";
    }
    return "?";
}

Method method_from_string(std::string_view name) {
    if (name == "energy-known") {
        return Method::EnergyKnown;
    }
    if (name == "energy-uncertain") {
        return Method::EnergyUncertain;
    }
    if (name == "cyclo-direct") {
        return Method::CycloDirect;
    }
    if (name == "cyclo-fresh") {
        return Method::CycloFresh;
    }
    throw ConfigError("unknown method: " + std::string(name));
}

std::vector<double> default_snr_grid() {
    std::vector<double> grid;
    for (int snr = 0; snr >= -20; snr -= 2) {
        grid.push_back(static_cast<double>(snr));
    }
    return grid;
}

FreshConfig fresh_config_for_radio(const RadioParams& params, std::size_t n_taps,
                                   double step_size) {
    params.validate();
    FreshConfig cfg;
    cfg.sample_rate_hz = params.sample_rate_hz;
    cfg.step_size = step_size;
    const double baud = params.baud_hz;
    const double fc2 = 2.0 * params.carrier_hz;
    cfg.branches = {
        {+baud, false, n_taps},        {-baud, false, n_taps},
        {+fc2, true, n_taps},          {-fc2, true, n_taps},
        {+(fc2 + baud), true, n_taps}, {-(fc2 + baud), true, n_taps},
    };
    return cfg;
}

void ExperimentSpec::derive_defaults() {
    if (statistic.alphas_hz.empty()) {
        statistic.alphas_hz = TestStatisticSpec::for_radio(radio).alphas_hz;
    }
    if (fresh.branches.empty()) {
        std::size_t taps = 64;
        fresh = fresh_config_for_radio(radio, taps, fresh.step_size);
    }
    fresh.sample_rate_hz = radio.sample_rate_hz;
}

void ExperimentSpec::validate() const {
    radio.validate();
    if (n_samples < 1) {
        throw std::invalid_argument("ExperimentSpec: n_samples must be >= 1");
    }
    if (snr_grid_db.empty()) {
        throw std::invalid_argument("ExperimentSpec: snr_grid_db must be nonempty");
    }
    if (!(pf_target > 0.0) || !(pf_target < 1.0)) {
        throw std::invalid_argument("ExperimentSpec: pf_target must lie in (0, 1)");
    }
    if (n_trials < 1) {
        throw std::invalid_argument("ExperimentSpec: n_trials must be >= 1");
    }
    if (uncertainty_db < 0.0) {
        throw std::invalid_argument("ExperimentSpec: uncertainty_db must be >= 0");
    }
    if (discard_prefix >= n_samples) {
        throw std::invalid_argument("ExperimentSpec: discard_prefix must be < n_samples");
    }
    if (method == Method::CycloDirect || method == Method::CycloFresh) {
        statistic.validate();
    }
    if (method == Method::CycloFresh) {
        fresh.validate();
    }
}

double ExperimentSpec::calibration_noise_var() const {
    if (method == Method::EnergyUncertain) {
        const UncertaintyBounds b = uncertainty_bounds(radio.noise_var, uncertainty_db);
        return uncertainty_convention == WorstCaseConvention::HighSetsThreshold ? b.high
                                                                                : b.low;
    }
    return radio.noise_var;
}

std::string ExperimentSpec::pipeline_id() const {
    char buf[256];
    std::string id(to_string(method));
    std::snprintf(buf, sizeof buf, "|n=%zu|fs=%.17g|nv=%.17g", n_samples,
                  radio.sample_rate_hz, radio.noise_var);
    id += buf;
    switch (method) {
    case Method::EnergyKnown:
        break;
    case Method::EnergyUncertain:
        std::snprintf(buf, sizeof buf, "|a=%.17g|conv=%s", uncertainty_db,
                      uncertainty_convention == WorstCaseConvention::HighSetsThreshold
                          ? "high"
                          : "low");
        id += buf;
        break;
    case Method::CycloFresh:
        std::snprintf(buf, sizeof buf, "|fresh=%016llx",
                      static_cast<unsigned long long>(fresh.hash()));
        id += buf;
        [[fallthrough]];
    case Method::CycloDirect:
        std::snprintf(buf, sizeof buf, "|discard=%zu|lag=%zu|combine=%s", discard_prefix,
                      statistic.lag, std::string(to_string(statistic.combine)).c_str());
        id += buf;
        for (double a : statistic.alphas_hz) {
            std::snprintf(buf, sizeof buf, "|alpha=%.17g", a);
            id += buf;
        }
        break;
    }
    return id;
}

std::uint64_t ExperimentSpec::pipeline_hash() const {
    if (method == Method::CycloDirect || method == Method::CycloFresh) {
        return detector_spec_hash(n_samples - discard_prefix, statistic, pipeline_id());
    }
    return fnv1a64("energy|" + pipeline_id());
}

std::uint64_t trial_stream_id(TrialRole role, std::size_t cell, std::size_t trial) {
    return (static_cast<std::uint64_t>(role) << 56) |
           (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(trial);
}

namespace {

IqBuffer drop_prefix(IqBuffer&& buf, std::size_t discard) {
    if (discard == 0) {
        return std::move(buf);
    }
    IqBuffer out;
    out.sample_rate_hz = buf.sample_rate_hz;
    out.samples.assign(buf.samples.begin() + static_cast<std::ptrdiff_t>(discard),
                       buf.samples.end());
    return out;
}

// Full pipeline of one trial. Noise variance is a parameter so that
// calibration can run at an uncertainty bound while evaluation runs at the
// true noise power.
double trial_statistic(const ExperimentSpec& spec, bool h1, double snr_db,
                       double noise_var, SplitRng& rng) {
    IqBuffer r;
    if (h1) {
        const double amplitude = snr_to_amplitude(snr_db, spec.radio.noise_var);
        IqBuffer x = gen_bpsk(spec.radio, spec.n_samples, amplitude, rng);
        IqBuffer w = gen_awgn(spec.n_samples, noise_var, spec.radio.sample_rate_hz, rng);
        r = add(x, w);
    } else {
        r = gen_awgn(spec.n_samples, noise_var, spec.radio.sample_rate_hz, rng);
    }

    switch (spec.method) {
    case Method::EnergyKnown:
    case Method::EnergyUncertain:
        return energy_statistic(r);
    case Method::CycloDirect:
        return test_statistic(drop_prefix(std::move(r), spec.discard_prefix),
                              spec.statistic);
    case Method::CycloFresh: {
        BlindRunResult res = run_blind(r, spec.fresh);
        return test_statistic(drop_prefix(std::move(res.output), spec.discard_prefix),
                              spec.statistic);
    }
    }
    throw std::logic_error("trial_statistic: unreachable");
}

} // namespace

double h0_trial_statistic(const ExperimentSpec& spec, SplitRng& rng) {
    return trial_statistic(spec, false, 0.0, spec.radio.noise_var, rng);
}

double h1_trial_statistic(const ExperimentSpec& spec, double snr_db, SplitRng& rng) {
    return trial_statistic(spec, true, snr_db, spec.radio.noise_var, rng);
}

CalibratedThreshold calibrate_spec_threshold(const ExperimentSpec& raw) {
    ExperimentSpec spec = raw;
    spec.derive_defaults();
    spec.validate();
    const double cal_noise_var = spec.calibration_noise_var();
    const auto h0 = [&spec, cal_noise_var](SplitRng& rng) {
        return trial_statistic(spec, false, 0.0, cal_noise_var, rng);
    };
    return calibrate_threshold(h0, spec.pf_target, spec.calibration_trials, spec.seed,
                               spec.pipeline_hash(), spec.pipeline_id(), spec.jobs);
}

SweepResult run_detection_sweep(const ExperimentSpec& raw,
                                const std::vector<CalibratedThreshold>* calibration) {
    ExperimentSpec spec = raw;
    spec.derive_defaults();
    spec.validate();

    SweepResult result;
    const std::uint64_t want_hash = spec.pipeline_hash();
    if (calibration != nullptr) {
        const CalibratedThreshold* found = find_threshold(*calibration, want_hash);
        if (found == nullptr) {
            throw ConfigError("run_detection_sweep: no calibrated threshold for pipeline " +
                              spec.pipeline_id());
        }
        if (std::abs(found->pf_target - spec.pf_target) > 1e-12) {
            throw ConfigError("run_detection_sweep: calibrated threshold targets pf=" +
                              std::to_string(found->pf_target) + ", spec wants " +
                              std::to_string(spec.pf_target));
        }
        result.threshold = *found;
    } else {
        result.threshold = calibrate_spec_threshold(spec);
    }
    const double lambda = result.threshold.lambda;

    std::atomic<std::size_t> diverged{0};
    for (std::size_t cell = 0; cell < spec.snr_grid_db.size(); ++cell) {
        const double snr_db = spec.snr_grid_db[cell];
        std::vector<signed char> h1_hits(spec.n_trials, -1); // -1 diverged
        std::vector<signed char> h0_hits(spec.n_trials, -1);
        parallel_for(spec.n_trials, spec.jobs, [&](std::size_t i) {
            {
                SplitRng rng = SplitRng::for_stream(
                    spec.seed, trial_stream_id(TrialRole::H1, cell, i));
                try {
                    const double t = h1_trial_statistic(spec, snr_db, rng);
                    h1_hits[i] = t > lambda ? 1 : 0;
                } catch (const DivergenceError&) {
                    diverged.fetch_add(1, std::memory_order_relaxed);
                }
            }
            {
                SplitRng rng = SplitRng::for_stream(
                    spec.seed, trial_stream_id(TrialRole::H0Heldout, cell, i));
                try {
                    const double t = h0_trial_statistic(spec, rng);
                    h0_hits[i] = t > lambda ? 1 : 0;
                } catch (const DivergenceError&) {
                    diverged.fetch_add(1, std::memory_order_relaxed);
                }
            }
        });

        auto rate = [](const std::vector<signed char>& hits) {
            std::size_t ok = 0, hit = 0;
            for (signed char h : hits) {
                if (h >= 0) {
                    ++ok;
                    hit += static_cast<std::size_t>(h);
                }
            }
            return ok == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(ok);
        };

        SweepRecord rec;
        rec.method = std::string(to_string(spec.method));
        rec.n_samples = spec.n_samples;
        rec.snr_db = snr_db;
        rec.pd = rate(h1_hits);
        rec.pf = rate(h0_hits);
        rec.lambda = lambda;
        rec.n_trials = spec.n_trials;
        rec.seed = spec.seed;
        result.records.push_back(rec);
    }

    result.diverged_trials = diverged.load();
    result.total_trials = 2 * spec.n_trials * spec.snr_grid_db.size();
    std::sort(result.records.begin(), result.records.end(),
              [](const SweepRecord& a, const SweepRecord& b) {
                  return std::tie(a.method, a.n_samples, a.snr_db) <
                         std::tie(b.method, b.n_samples, b.snr_db);
              });
    return result;
}

std::vector<MseRow> run_mse_experiment(const MseExperimentSpec& raw) {
    MseExperimentSpec spec = raw;
    spec.radio.validate();
    if (spec.mu_grid.empty()) {
        throw std::invalid_argument("run_mse_experiment: mu_grid must be nonempty");
    }
    if (spec.n_iterations < 1 || spec.window < 1) {
        throw std::invalid_argument("run_mse_experiment: n_iterations and window must be >= 1");
    }
    if (spec.fresh.branches.empty()) {
        spec.fresh = fresh_config_for_radio(spec.radio, 64, spec.fresh.step_size);
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<MseRow> rows(spec.mu_grid.size() * spec.n_iterations);
    parallel_for(spec.mu_grid.size(), spec.jobs, [&](std::size_t mi) {
        const double mu = spec.mu_grid[mi];
        SplitRng rng = SplitRng::for_stream(spec.seed, mi);
        const double amplitude = snr_to_amplitude(spec.snr_db, spec.radio.noise_var);
        IqBuffer x = gen_bpsk(spec.radio, spec.n_iterations, amplitude, rng);
        IqBuffer w = gen_awgn(spec.n_iterations, spec.radio.noise_var,
                              spec.radio.sample_rate_hz, rng);
        IqBuffer r = add(x, w);

        FreshConfig cfg = spec.fresh;
        cfg.step_size = mu;
        BlindRunResult res = run_blind_partial(r, cfg);
        const std::vector<double> avg =
            windowed_average(res.trace.squared_error, spec.window);

        for (std::size_t i = 0; i < spec.n_iterations; ++i) {
            MseRow& row = rows[mi * spec.n_iterations + i];
            row.mu = mu;
            row.iteration = i;
            if (i < avg.size()) {
                row.time_averaged_mse = avg[i];
                row.diverged = false;
            } else {
                row.time_averaged_mse = nan;
                row.diverged = true;
            }
        }
    });
    return rows;
}

// --- file formats ------------------------------------------------------------

namespace {

std::string g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open for writing: " + path.string());
    }
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open for reading: " + path.string());
    }
    return is;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        out.push_back(field);
    }
    return out;
}

} // namespace

void emit_csv(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
    std::vector<SweepRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.method, a.n_samples, a.snr_db) <
               std::tie(b.method, b.n_samples, b.snr_db);
    });
    std::ofstream os = open_out(path);
    os << "method,n_samples,snr_db,pd,pf,lambda,n_trials,seed\n";
    for (const auto& r : sorted) {
        os << r.method << ',' << r.n_samples << ',' << g6(r.snr_db) << ',' << g6(r.pd)
           << ',' << g6(r.pf) << ',' << g6(r.lambda) << ',' << r.n_trials << ','
           << r.seed << '\n';
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<SweepRecord> parse_csv(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    std::string line;
    if (!std::getline(is, line) || line != "method,n_samples,snr_db,pd,pf,lambda,n_trials,seed") {
        throw IoError("bad sweep CSV header in " + path.string());
    }
    std::vector<SweepRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 8) {
            throw IoError("bad sweep CSV row in " + path.string() + ": " + line);
        }
        SweepRecord r;
        r.method = fields[0];
        r.n_samples = std::stoull(fields[1]);
        r.snr_db = std::stod(fields[2]);
        r.pd = std::stod(fields[3]);
        r.pf = std::stod(fields[4]);
        r.lambda = std::stod(fields[5]);
        r.n_trials = std::stoull(fields[6]);
        r.seed = std::stoull(fields[7]);
        out.push_back(std::move(r));
    }
    return out;
}

void emit_mse_csv(const std::vector<MseRow>& rows, const std::filesystem::path& path) {
    std::ofstream os = open_out(path);
    os << "mu,iteration,time_averaged_mse,diverged\n";
    for (const auto& r : rows) {
        os << g6(r.mu) << ',' << r.iteration << ',' << g6(r.time_averaged_mse) << ','
           << (r.diverged ? 1 : 0) << '\n';
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

void emit_caf_csv(const std::vector<CafEstimate>& estimates,
                  const std::filesystem::path& path) {
    std::ofstream os = open_out(path);
    os << "alpha_hz,lag,re,im,magnitude\n";
    for (const auto& e : estimates) {
        os << g6(e.spec.alpha_hz) << ',' << e.spec.lag << ',' << g6(e.value.real()) << ','
           << g6(e.value.imag()) << ',' << g6(std::abs(e.value)) << '\n';
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

void save_thresholds(const std::vector<CalibratedThreshold>& thresholds,
                     const std::filesystem::path& path) {
    std::ofstream os = open_out(path);
    os << "freshsense-calibration v1\n";
    char buf[160];
    for (const auto& t : thresholds) {
        std::snprintf(buf, sizeof buf,
                      "pf_target=%.17g lambda=%.17g n_trials=%zu seed=%llu spec_hash=%016llx "
                      "pipeline=",
                      t.pf_target, t.lambda, t.n_calibration_trials,
                      static_cast<unsigned long long>(t.seed),
                      static_cast<unsigned long long>(t.spec_hash));
        os << buf << t.pipeline << '\n';
    }
    if (!os) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<CalibratedThreshold> load_thresholds(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    std::string line;
    if (!std::getline(is, line) || line != "freshsense-calibration v1") {
        throw IoError("bad calibration file header in " + path.string());
    }
    std::vector<CalibratedThreshold> out;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        CalibratedThreshold t;
        char hash_hex[32] = {0};
        unsigned long long seed = 0;
        int consumed = 0;
        const int got = std::sscanf(line.c_str(),
                                    "pf_target=%lg lambda=%lg n_trials=%zu seed=%llu "
                                    "spec_hash=%16s pipeline=%n",
                                    &t.pf_target, &t.lambda, &t.n_calibration_trials, &seed,
                                    hash_hex, &consumed);
        if (got != 5 || consumed == 0) {
            throw IoError("bad calibration record in " + path.string() + ": " + line);
        }
        t.seed = seed;
        t.spec_hash = std::stoull(hash_hex, nullptr, 16);
        t.pipeline = line.substr(static_cast<std::size_t>(consumed));
        out.push_back(std::move(t));
    }
    return out;
}

const CalibratedThreshold* find_threshold(const std::vector<CalibratedThreshold>& thresholds,
                                          std::uint64_t spec_hash) {
    for (const auto& t : thresholds) {
        if (t.spec_hash == spec_hash) {
            return &t;
        }
    }
    return nullptr;
}

void upsert_threshold(std::vector<CalibratedThreshold>& thresholds,
                      const CalibratedThreshold& entry) {
    for (auto& t : thresholds) {
        if (t.spec_hash == entry.spec_hash) {
            t = entry;
            return;
        }
    }
    thresholds.push_back(entry);
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
    std::ifstream is = open_in(path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key=value");
        }
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    return kv;
}

namespace {

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& f : split(text, ',')) {
        out.push_back(std::stod(f));
    }
    return out;
}

} // namespace

void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        try {
            if (key == "method") {
                spec.method = method_from_string(value);
            } else if (key == "n_samples") {
                spec.n_samples = std::stoull(value);
            } else if (key == "snr_grid_db") {
                spec.snr_grid_db = parse_double_list(value);
            } else if (key == "pf_target") {
                spec.pf_target = std::stod(value);
            } else if (key == "n_trials") {
                spec.n_trials = std::stoull(value);
            } else if (key == "uncertainty_db") {
                spec.uncertainty_db = std::stod(value);
            } else if (key == "uncertainty_convention") {
                if (value == "high-sets-threshold") {
                    spec.uncertainty_convention = WorstCaseConvention::HighSetsThreshold;
                } else if (value == "low-sets-threshold") {
                    spec.uncertainty_convention = WorstCaseConvention::LowSetsThreshold;
                } else {
                    throw ConfigError("bad uncertainty_convention: " + value);
                }
            } else if (key == "carrier_hz") {
                spec.radio.carrier_hz = std::stod(value);
            } else if (key == "baud_hz") {
                spec.radio.baud_hz = std::stod(value);
            } else if (key == "sample_rate_hz") {
                spec.radio.sample_rate_hz = std::stod(value);
            } else if (key == "noise_var") {
                spec.radio.noise_var = std::stod(value);
            } else if (key == "step_size") {
                spec.fresh.step_size = std::stod(value);
            } else if (key == "n_taps") {
                spec.fresh = fresh_config_for_radio(spec.radio, std::stoull(value),
                                                    spec.fresh.step_size);
            } else if (key == "lag") {
                spec.statistic.lag = std::stoull(value);
            } else if (key == "combine") {
                spec.statistic.combine = combine_rule_from_string(value);
            } else if (key == "discard_prefix") {
                spec.discard_prefix = std::stoull(value);
            } else if (key == "calibration_trials") {
                spec.calibration_trials = std::stoull(value);
            } else if (key == "seed") {
                spec.seed = std::stoull(value);
            } else if (key == "jobs") {
                spec.jobs = static_cast<unsigned>(std::stoul(value));
            } else {
                throw ConfigError("unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad value for config key " + key + ": " + value);
        } catch (const std::out_of_range&) {
            throw ConfigError("out-of-range value for config key " + key + ": " + value);
        }
    }
}

ExperimentSpec sweep_preset(std::string_view name) {
    ExperimentSpec spec;
    spec.radio = RadioParams{};
    spec.snr_grid_db = default_snr_grid();
    spec.pf_target = 0.01;
    spec.n_trials = 1000;
    spec.calibration_trials = 10000;
    spec.uncertainty_db = 1.0;
    if (name == "paper-fig3") {
        spec.n_samples = 800;
    } else if (name == "paper-fig4") {
        spec.n_samples = 1600;
    } else if (name == "paper-fig5") {
        spec.n_samples = 3200;
    } else {
        throw ConfigError("unknown sweep preset: " + std::string(name) +
                          " (expected paper-fig3, paper-fig4 or paper-fig5)");
    }
    return spec;
}

MseExperimentSpec mse_preset(std::string_view name) {
    if (name != "paper-fig2") {
        throw ConfigError("unknown mse preset: " + std::string(name) +
                          " (expected paper-fig2)");
    }
    MseExperimentSpec spec;
    spec.mu_grid = {5e-6, 5e-5, 5e-4};
    spec.n_iterations = 20000;
    spec.window = 200;
    spec.snr_db = 0.0;
    return spec;
}

} // namespace freshsense
