#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace freshsense {

// Buffer length / sample-rate mismatch between operands.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive filter produced a non-finite weight or output. Carries the sample
// index so a Monte-Carlo driver can abort the one trial instead of the run.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t sample_index)
        : std::runtime_error(what + " at sample " + std::to_string(sample_index)),
          sample_index_(sample_index) {}
    std::size_t sample_index() const { return sample_index_; }

private:
    std::size_t sample_index_;
};

// Configuration inconsistency: threshold bound to a different pipeline,
// unknown config key, mismatched state snapshot, ...
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File I/O failure, message carries the path.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace freshsense
