#include "spectra/run.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "spectra/errors.hpp"
#include "spectra/io.hpp"

namespace spectra {

using nlohmann::json;

namespace {

std::filesystem::path snapshot_dir(const std::filesystem::path& run_dir, std::size_t epoch) {
    return run_dir / "snapshots" / ("epoch_" + std::to_string(epoch));
}

std::vector<std::filesystem::path> snapshot_files(const std::filesystem::path& dir,
                                                  std::size_t depth) {
    std::vector<std::filesystem::path> files;
    for (std::size_t l = 0; l < depth; ++l) {
        files.push_back(dir / ("weights_" + std::to_string(l) + ".csv"));
        files.push_back(dir / ("grads_" + std::to_string(l) + ".csv"));
        files.push_back(dir / ("pre_" + std::to_string(l) + ".csv"));
    }
    for (std::size_t l = 0; l + 1 < depth; ++l) {
        files.push_back(dir / ("acts_" + std::to_string(l + 1) + ".csv"));
    }
    files.push_back(dir / "logits.csv");
    files.push_back(dir / "probs.csv");
    return files;
}

} // namespace

TrainRunResult run_training(const RunConfig& config, bool persist) {
    config.validate();
    const Dataset train_set = load_source(config.dataset, Split::train, config.train.seed);
    if (train_set.features.rows != config.net.input_dim()) {
        throw ConfigError("dataset dim " + std::to_string(train_set.features.rows) +
                          " != net input width " + std::to_string(config.net.input_dim()));
    }
    const auto [diag, diag_labels] = diagnostic_batch(train_set);
    TrainRunResult result;
    result.config = config;
    try {
        result.trace = train(config.net, config.init, config.train, train_set, diag,
                             diag_labels, config.record_epochs);
    } catch (const DivergenceError& e) {
        // preserve whatever was recorded before the loss went non-finite
        if (persist) {
            const std::filesystem::path dir =
                std::filesystem::path(config.output_dir) / run_id(config);
            persist_trace(e.partial, config, dir);
        }
        throw;
    }
    if (persist) {
        const std::filesystem::path dir =
            std::filesystem::path(config.output_dir) / run_id(config);
        persist_trace(result.trace, config, dir);
        result.run_dir = dir;
    }
    return result;
}

void persist_trace(const TrainTrace& trace, const RunConfig& config,
                   const std::filesystem::path& run_dir) {
    std::filesystem::create_directories(run_dir / "snapshots");
    write_matrix_csv(trace.diagnostic_batch, run_dir / "diagnostic_batch.csv");
    write_labels_csv(trace.diagnostic_labels, run_dir / "diagnostic_labels.csv");

    json manifest;
    manifest["schema_version"] = 1;
    manifest["run_id"] = run_id(config);
    manifest["config"] = json::parse(canonical_run_config_json(config));
    json snaps = json::array();
    for (const EpochSnapshot& snap : trace.snapshots) {
        const std::filesystem::path dir = snapshot_dir(run_dir, snap.epoch);
        std::filesystem::create_directories(dir);
        for (std::size_t l = 0; l < snap.weights.size(); ++l) {
            write_matrix_csv(snap.weights[l], dir / ("weights_" + std::to_string(l) + ".csv"));
            write_matrix_csv(snap.gradients[l], dir / ("grads_" + std::to_string(l) + ".csv"));
            write_matrix_csv(snap.pre_activations[l],
                             dir / ("pre_" + std::to_string(l) + ".csv"));
        }
        for (std::size_t l = 1; l < snap.activations.size(); ++l) {
            write_matrix_csv(snap.activations[l], dir / ("acts_" + std::to_string(l) + ".csv"));
        }
        write_matrix_csv(snap.logits, dir / "logits.csv");
        write_matrix_csv(snap.probs, dir / "probs.csv");
        snaps.push_back({{"epoch", snap.epoch},
                         {"train_loss", snap.train_loss},
                         {"train_accuracy", snap.train_accuracy}});
    }
    manifest["snapshots"] = snaps;
    atomic_write_text(run_dir / "manifest.json", manifest.dump(2));
}

TrainTrace load_trace(const std::filesystem::path& run_dir, RunConfig* config_out) {
    const std::filesystem::path manifest_path = run_dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw MissingArtifactsError("missing manifest.json in " + run_dir.string());
    }
    const json manifest = json::parse(read_text(manifest_path));
    if (manifest.at("schema_version").get<int>() != 1) {
        throw ValidationError("manifest: unsupported schema_version");
    }
    const RunConfig config = parse_run_config(manifest.at("config").dump());
    if (config_out != nullptr) *config_out = config;

    TrainTrace trace;
    trace.spec = config.net;
    trace.config = config.train;
    trace.diagnostic_batch = read_matrix_csv(run_dir / "diagnostic_batch.csv");
    trace.diagnostic_labels = read_labels_csv(run_dir / "diagnostic_labels.csv");

    // Verify every listed snapshot is complete before loading any of it.
    std::string absent;
    for (const auto& snap : manifest.at("snapshots")) {
        const std::size_t epoch = snap.at("epoch").get<std::size_t>();
        const std::filesystem::path dir = snapshot_dir(run_dir, epoch);
        bool complete = std::filesystem::exists(dir);
        if (complete) {
            for (const auto& f : snapshot_files(dir, config.net.depth())) {
                if (!std::filesystem::exists(f)) {
                    complete = false;
                    break;
                }
            }
        }
        if (!complete) {
            if (!absent.empty()) absent += ", ";
            absent += std::to_string(epoch);
        }
    }
    if (!absent.empty()) {
        throw MissingArtifactsError("run " + run_dir.string() +
                                    " is missing snapshot epochs: " + absent);
    }

    for (const auto& snap_meta : manifest.at("snapshots")) {
        EpochSnapshot snap;
        snap.epoch = snap_meta.at("epoch").get<std::size_t>();
        snap.train_loss = snap_meta.at("train_loss").get<double>();
        snap.train_accuracy = snap_meta.at("train_accuracy").get<double>();
        const std::filesystem::path dir = snapshot_dir(run_dir, snap.epoch);
        snap.activations.push_back(trace.diagnostic_batch);
        for (std::size_t l = 0; l < config.net.depth(); ++l) {
            snap.weights.push_back(read_matrix_csv(dir / ("weights_" + std::to_string(l) + ".csv")));
            snap.gradients.push_back(read_matrix_csv(dir / ("grads_" + std::to_string(l) + ".csv")));
            snap.pre_activations.push_back(
                read_matrix_csv(dir / ("pre_" + std::to_string(l) + ".csv")));
            if (l + 1 < config.net.depth()) {
                snap.activations.push_back(
                    read_matrix_csv(dir / ("acts_" + std::to_string(l + 1) + ".csv")));
            }
        }
        snap.logits = read_matrix_csv(dir / "logits.csv");
        snap.probs = read_matrix_csv(dir / "probs.csv");
        trace.snapshots.push_back(std::move(snap));
    }
    return trace;
}

MetricsReport analyze_trace(const TrainTrace& trace, const RunConfig& config) {
    const Dataset id_set = load_source(config.dataset, Split::test, config.train.seed);
    const Dataset ood_set = load_source(config.ood_dataset, Split::ood, config.train.seed);
    return metrics_report(trace, id_set, ood_set, config.rank_policy, config.train.seed);
}

MetricsReport analyze_run(const std::filesystem::path& run_dir) {
    RunConfig config;
    const TrainTrace trace = load_trace(run_dir, &config);
    const MetricsReport report = analyze_trace(trace, config);
    std::filesystem::create_directories(run_dir / "metrics");
    atomic_write_text(run_dir / "metrics" / "metrics.json", metrics_to_json(report));
    write_curves_csv(report, run_dir / "metrics" / "curves.csv");
    return report;
}

PairedRunResult run_paired(const RunConfig& base, const std::string& overrides_json,
                           bool persist) {
    const RunConfig variant_cfg = apply_train_overrides(base, overrides_json);
    const TrainRunResult base_run = run_training(base, persist);
    const TrainRunResult variant_run = run_training(variant_cfg, persist);

    PairedRunResult out;
    out.baseline = analyze_trace(base_run.trace, base);
    out.variant = analyze_trace(variant_run.trace, variant_cfg);
    const auto growth = [](const MetricsReport& r) {
        const double initial = r.logits_norm.front();
        return initial > 0.0 ? r.logits_norm.back() / initial : 0.0;
    };
    out.baseline_growth = growth(out.baseline);
    out.variant_growth = growth(out.variant);
    out.deltas.kappa = out.variant.kappa - out.baseline.kappa;
    out.deltas.rho = out.variant.rho - out.baseline.rho;
    out.deltas.sr = static_cast<long long>(out.variant.sr) -
                    static_cast<long long>(out.baseline.sr);
    out.deltas.orthodev = out.variant.orthodev - out.baseline.orthodev;
    out.deltas.final_logits_norm_ratio =
        out.baseline_growth > 0.0 ? out.variant_growth / out.baseline_growth : 0.0;

    if (persist) {
        const std::filesystem::path dir =
            std::filesystem::path(base.output_dir) / (run_id(base) + "_paired");
        std::filesystem::create_directories(dir);
        atomic_write_text(dir / "paired.json", paired_to_json(out));
    }
    return out;
}

std::string paired_to_json(const PairedRunResult& result) {
    json j;
    j["schema_version"] = 1;
    j["baseline"] = json::parse(metrics_to_json(result.baseline));
    j["variant"] = json::parse(metrics_to_json(result.variant));
    j["baseline_growth"] = result.baseline_growth;
    j["variant_growth"] = result.variant_growth;
    j["deltas"]["kappa"] = result.deltas.kappa;
    j["deltas"]["rho"] = result.deltas.rho;
    j["deltas"]["sr"] = result.deltas.sr;
    j["deltas"]["orthodev"] = result.deltas.orthodev;
    j["deltas"]["final_logits_norm_ratio"] = result.deltas.final_logits_norm_ratio;
    return j.dump(2);
}

std::vector<InitSweepRow> init_sweep(const RunConfig& base, const std::vector<double>& sigmas) {
    if (sigmas.empty()) throw ConfigError("init_sweep: sigma list empty");
    std::vector<InitSweepRow> rows;
    for (double sigma : sigmas) {
        if (!(sigma > 0.0)) throw ConfigError("init_sweep: sigmas must be > 0");
        RunConfig cfg = base;
        cfg.init.kind = InitKind::normal;
        cfg.init.sigma = sigma;
        const TrainRunResult run = run_training(cfg, false);
        InitSweepRow row;
        row.sigma = sigma;
        double sum = 0.0;
        for (double v : run.trace.initial().logits.data) sum += v * v;
        row.initial_logits_norm = std::sqrt(sum);
        row.final_sr = solutions_rank(run.trace.final().logits, cfg.rank_policy);
        rows.push_back(row);
    }
    return rows;
}

std::string init_sweep_csv(const std::vector<InitSweepRow>& rows) {
    std::string text = "sigma,initial_logits_norm,final_sr\n";
    char buf[48];
    for (const InitSweepRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu\n", row.sigma,
                      row.initial_logits_norm, row.final_sr);
        text += buf;
    }
    return text;
}

} // namespace spectra
