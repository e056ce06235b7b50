#pragma once
#include <stdexcept>
#include <string>

namespace spectra {

// Shape/size violations: empty matrices, mismatched products, k out of range.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad values: non-finite entries, non-stochastic columns, invalid parameters.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run/probe/CLI configuration (unknown keys, missing fields, bad ranges).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Loss went non-finite during training. Carries the last epoch that completed
// with a finite loss so callers can preserve the partial trace.
struct TrainingError : std::runtime_error {
    std::size_t last_valid_epoch;
    TrainingError(const std::string& msg, std::size_t last_epoch)
        : std::runtime_error(msg), last_valid_epoch(last_epoch) {}
};

// Jacobi sweeps exhausted without reaching the convergence criterion.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Probe given fewer than two distinct labels.
struct DegenerateLabelsError : std::runtime_error {
    explicit DegenerateLabelsError(const std::string& msg) : std::runtime_error(msg) {}
};

// A random draw violated an almost-sure property (e.g. rank(B) != 2).
struct DegenerateDrawError : std::runtime_error {
    explicit DegenerateDrawError(const std::string& msg) : std::runtime_error(msg) {}
};

// Class or global mean vector with zero norm; cosine undefined.
struct DegenerateRepresentationError : std::runtime_error {
    explicit DegenerateRepresentationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Run directory incomplete (missing snapshots); message lists absent epochs.
struct MissingArtifactsError : std::runtime_error {
    explicit MissingArtifactsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spectra
