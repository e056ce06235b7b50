#pragma once
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectra/config.hpp"
#include "spectra/diagnostics.hpp"
#include "spectra/net.hpp"

namespace spectra {

struct TrainRunResult {
    RunConfig config;
    TrainTrace trace;
    std::filesystem::path run_dir;  // empty when not persisted
};

// Train per config; when persist is set, write the content-addressed run
// directory (<output_dir>/<run-id>/ with manifest.json and snapshot CSVs).
TrainRunResult run_training(const RunConfig& config, bool persist);

void persist_trace(const TrainTrace& trace, const RunConfig& config,
                   const std::filesystem::path& run_dir);

// Rebuild a trace from a persisted run directory. Throws
// MissingArtifactsError listing absent epochs when snapshots are missing.
TrainTrace load_trace(const std::filesystem::path& run_dir, RunConfig* config_out);

// Diagnostics for a finished run: probes, kappa/rho/SR/OrthoDev, curves.
MetricsReport analyze_trace(const TrainTrace& trace, const RunConfig& config);

// Same, from disk; writes metrics/metrics.json and metrics/curves.csv into
// the run directory.
MetricsReport analyze_run(const std::filesystem::path& run_dir);

struct PairedDeltas {
    double kappa = 0.0;
    double rho = 0.0;
    long long sr = 0;
    double orthodev = 0.0;
    double final_logits_norm_ratio = 0.0;  // variant growth / baseline growth
};

struct PairedRunResult {
    MetricsReport baseline;
    MetricsReport variant;
    PairedDeltas deltas;
    double baseline_growth = 0.0;  // final / initial logits norm
    double variant_growth = 0.0;
};

// Baseline vs variant on identical seed and data; overrides may touch only
// TrainConfig fields. The shuffle stream is keyed on (seed, epoch) alone, so
// the variant replays the baseline's shuffle order by construction.
PairedRunResult run_paired(const RunConfig& base, const std::string& overrides_json,
                           bool persist);

std::string paired_to_json(const PairedRunResult& result);

struct InitSweepRow {
    double sigma = 0.0;
    double initial_logits_norm = 0.0;
    std::size_t final_sr = 0;
};

// One training run per sigma (normal init), reporting the epoch-0 logits
// norm and the final solutions rank.
std::vector<InitSweepRow> init_sweep(const RunConfig& base, const std::vector<double>& sigmas);

std::string init_sweep_csv(const std::vector<InitSweepRow>& rows);

} // namespace spectra
