#include "freshsense/fresh.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "freshsense/errors.hpp"
#include "freshsense/hash.hpp"

namespace freshsense {

namespace {

constexpr std::uint64_t kRotatorResync = 1024;

bool finite(std::complex<double> z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

} // namespace

void FreshConfig::validate() const {
    if (branches.empty()) {
        throw std::invalid_argument("FreshConfig: at least one branch required");
    }
    for (const auto& b : branches) {
        if (b.n_taps < 1) {
            throw std::invalid_argument("FreshConfig: branch tap count must be >= 1");
        }
    }
    if (!(sample_rate_hz > 0.0)) {
        throw std::invalid_argument("FreshConfig: sample_rate_hz must be positive");
    }
    if (!(step_size >= 0.0)) {
        throw std::invalid_argument("FreshConfig: step_size must be >= 0");
    }
}

std::size_t FreshConfig::total_taps() const {
    std::size_t total = 0;
    for (const auto& b : branches) {
        total += b.n_taps;
    }
    return total;
}

std::uint64_t FreshConfig::hash() const {
    char buf[128];
    std::string canon = "fresh-v1";
    std::snprintf(buf, sizeof buf, "|fs=%.17g|mu=%.17g", sample_rate_hz, step_size);
    canon += buf;
    for (const auto& b : branches) {
        std::snprintf(buf, sizeof buf, "|%.17g,%d,%zu", b.shift_hz, b.conjugate ? 1 : 0,
                      b.n_taps);
        canon += buf;
    }
    return fnv1a64(canon);
}

FreshConfig FreshConfig::paper_default() {
    FreshConfig cfg;
    cfg.sample_rate_hz = 32.0 * 3200.0;
    cfg.step_size = 5e-5;
    const double baud = 3200.0;
    const double fc2 = 2.0 * 30720.0;
    cfg.branches = {
        {+baud, false, 64},        {-baud, false, 64},
        {+fc2, true, 64},          {-fc2, true, 64},
        {+(fc2 + baud), true, 64}, {-(fc2 + baud), true, 64},
    };
    return cfg;
}

FreshState::FreshState(const FreshConfig& config) {
    config.validate();
    const std::size_t n_branches = config.branches.size();
    offsets.resize(n_branches);
    heads.assign(n_branches, 0);
    rotators.resize(n_branches);
    rot_steps.resize(n_branches);
    std::size_t off = 0;
    for (std::size_t b = 0; b < n_branches; ++b) {
        offsets[b] = off;
        off += config.branches[b].n_taps;
        rotators[b] = {1.0, 0.0};
        rot_steps[b] =
            unit_phasor(config.branches[b].shift_hz / config.sample_rate_hz, 1);
    }
    weights.assign(off, {0.0, 0.0});
    delay.assign(off, {0.0, 0.0});
}

std::complex<double> branch_input(std::complex<double> x, const BranchSpec& spec,
                                  std::uint64_t n, double sample_rate_hz) {
    const std::complex<double> base = spec.conjugate ? std::conj(x) : x;
    return base * unit_phasor(spec.shift_hz / sample_rate_hz, n);
}

std::complex<double> filter_sample(FreshState& state, const FreshConfig& config,
                                   std::complex<double> x) {
    const std::size_t n_branches = config.branches.size();
    const std::complex<double> xc = std::conj(x);
    std::complex<double> y = {0.0, 0.0};

    for (std::size_t b = 0; b < n_branches; ++b) {
        const BranchSpec& spec = config.branches[b];
        const std::size_t taps = spec.n_taps;
        std::complex<double>* ring = state.delay.data() + state.offsets[b];
        const std::complex<double>* w = state.weights.data() + state.offsets[b];

        std::size_t head = state.heads[b] + 1;
        if (head == taps) {
            head = 0;
        }
        state.heads[b] = head;
        ring[head] = (spec.conjugate ? xc : x) * state.rotators[b];

        // w[t] pairs with u(n - t) = ring[(head - t) mod taps]; walk the ring
        // backwards in two contiguous segments
        std::complex<double> acc = {0.0, 0.0};
        std::size_t t = 0;
        for (std::size_t idx = head + 1; idx-- > 0; ++t) {
            acc += w[t] * ring[idx];
        }
        for (std::size_t idx = taps; idx-- > head + 1; ++t) {
            acc += w[t] * ring[idx];
        }
        y += acc;
    }

    // advance the shifter phase; periodically recompute from the sample index
    // so the recurrence cannot drift
    const std::uint64_t next = state.sample_index + 1;
    if (next % kRotatorResync == 0) {
        for (std::size_t b = 0; b < n_branches; ++b) {
            state.rotators[b] = unit_phasor(
                config.branches[b].shift_hz / config.sample_rate_hz, next);
        }
    } else {
        for (std::size_t b = 0; b < n_branches; ++b) {
            state.rotators[b] *= state.rot_steps[b];
        }
    }
    state.sample_index = next;
    return y;
}

LmsOutput lms_step(FreshState& state, const FreshConfig& config,
                   std::complex<double> x, std::complex<double> d) {
    const std::uint64_t n = state.sample_index;
    const std::complex<double> y = filter_sample(state, config, x);
    const std::complex<double> err = d - y;
    if (!finite(y) || !finite(err)) {
        throw DivergenceError("fresh: non-finite filter output", n);
    }

    const std::complex<double> gain = config.step_size * err;
    if (gain != std::complex<double>{0.0, 0.0}) {
        for (std::size_t b = 0; b < config.branches.size(); ++b) {
            const std::size_t taps = config.branches[b].n_taps;
            const std::complex<double>* ring = state.delay.data() + state.offsets[b];
            std::complex<double>* w = state.weights.data() + state.offsets[b];
            const std::size_t head = state.heads[b];
            std::size_t t = 0;
            for (std::size_t idx = head + 1; idx-- > 0; ++t) {
                w[t] += gain * std::conj(ring[idx]);
            }
            for (std::size_t idx = taps; idx-- > head + 1; ++t) {
                w[t] += gain * std::conj(ring[idx]);
            }
        }
    }
    return {y, err};
}

std::vector<double> windowed_average(const std::vector<double>& v, std::size_t window) {
    if (window < 1) {
        throw std::invalid_argument("windowed_average: window must be >= 1");
    }
    std::vector<double> out(v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += v[i];
        if (i >= window) {
            acc -= v[i - window];
        }
        const std::size_t span = std::min(i + 1, window);
        out[i] = acc / static_cast<double>(span);
    }
    return out;
}

BlindRunResult run_blind_partial(const IqBuffer& x, const FreshConfig& config) {
    if (x.empty()) {
        throw std::invalid_argument("run_blind: empty input");
    }
    BlindRunResult res{IqBuffer{{}, x.sample_rate_hz}, MseTrace{}, FreshState(config), {}};
    res.output.samples.reserve(x.size());
    res.trace.squared_error.reserve(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        LmsOutput step;
        try {
            step = lms_step(res.final_state, config, x.samples[n], x.samples[n]);
        } catch (const DivergenceError& e) {
            res.diverged_at = e.sample_index();
            break;
        }
        res.output.samples.push_back(step.y);
        res.trace.squared_error.push_back(std::norm(step.err));
    }
    return res;
}

BlindRunResult run_blind(const IqBuffer& x, const FreshConfig& config) {
    BlindRunResult res = run_blind_partial(x, config);
    if (res.diverged_at) {
        throw DivergenceError("fresh: blind adaptation diverged", *res.diverged_at);
    }
    return res;
}

void save_state(const FreshState& state, const FreshConfig& config, std::ostream& os) {
    os << "freshsense-state v1\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "config_hash %016llx\n",
                  static_cast<unsigned long long>(config.hash()));
    os << buf;
    os << "sample_index " << state.sample_index << "\n";
    os << "n_weights " << state.weights.size() << "\n";
    for (const auto& w : state.weights) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", w.real(), w.imag());
        os << buf;
    }
}

FreshState load_state(const FreshConfig& config, std::istream& is) {
    std::string word, version;
    is >> word >> version;
    if (!is || word != "freshsense-state" || version != "v1") {
        throw ConfigError("load_state: not a freshsense-state v1 snapshot");
    }
    std::string key;
    std::string hash_hex;
    is >> key >> hash_hex;
    if (!is || key != "config_hash") {
        throw ConfigError("load_state: missing config_hash");
    }
    const std::uint64_t stored = std::stoull(hash_hex, nullptr, 16);
    if (stored != config.hash()) {
        throw ConfigError("load_state: snapshot was produced by a different filter config");
    }
    std::uint64_t sample_index = 0;
    std::size_t n_weights = 0;
    is >> key >> sample_index;
    if (!is || key != "sample_index") {
        throw ConfigError("load_state: missing sample_index");
    }
    is >> key >> n_weights;
    if (!is || key != "n_weights") {
        throw ConfigError("load_state: missing n_weights");
    }
    FreshState state(config);
    if (n_weights != state.weights.size()) {
        throw ConfigError("load_state: weight count mismatch");
    }
    for (auto& w : state.weights) {
        double re = 0.0, im = 0.0;
        is >> re >> im;
        if (!is) {
            throw ConfigError("load_state: truncated weight table");
        }
        w = {re, im};
    }
    state.sample_index = sample_index;
    for (std::size_t b = 0; b < config.branches.size(); ++b) {
        state.rotators[b] = unit_phasor(
            config.branches[b].shift_hz / config.sample_rate_hz, sample_index);
    }
    return state;
}

} // namespace freshsense
