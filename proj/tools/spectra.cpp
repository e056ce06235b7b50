// spectra: train softmax-temperature MLPs, measure collapse diagnostics, and
// verify the spectral claims behind them.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectra/config.hpp"
#include "spectra/diagnostics.hpp"
#include "spectra/errors.hpp"
#include "spectra/io.hpp"
#include "spectra/rng.hpp"
#include "spectra/run.hpp"
#include "spectra/theory.hpp"

using namespace spectra;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitMissing = 4;

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> rank_mode;
    std::optional<double> rank_threshold;
};

void apply_globals(RunConfig& cfg, const GlobalOpts& g) {
    if (g.seed) cfg.train.seed = *g.seed;
    if (g.out) cfg.output_dir = *g.out;
    if (g.rank_mode) {
        if (*g.rank_mode == "relative") {
            cfg.rank_policy.mode = RankPolicy::Mode::relative;
        } else if (*g.rank_mode == "absolute") {
            cfg.rank_policy.mode = RankPolicy::Mode::absolute;
        } else {
            throw ConfigError("--rank-mode must be 'relative' or 'absolute'");
        }
    }
    if (g.rank_threshold) cfg.rank_policy.threshold = *g.rank_threshold;
    cfg.validate();
}

RankPolicy policy_from_globals(const GlobalOpts& g) {
    RankPolicy policy = RankPolicy::relative();
    if (g.rank_mode) {
        if (*g.rank_mode == "absolute") {
            policy.mode = RankPolicy::Mode::absolute;
        } else if (*g.rank_mode != "relative") {
            throw ConfigError("--rank-mode must be 'relative' or 'absolute'");
        }
    }
    if (g.rank_threshold) policy.threshold = *g.rank_threshold;
    policy.validate();
    return policy;
}

int cmd_train(const std::string& config_path, const GlobalOpts& g) {
    RunConfig cfg = load_run_config(config_path);
    apply_globals(cfg, g);
    const TrainRunResult result = run_training(cfg, true);
    std::cout << "run directory: " << result.run_dir.string() << "\n";
    std::cout << "final train loss " << result.trace.final().train_loss << ", accuracy "
              << result.trace.final().train_accuracy << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& run_dir) {
    const MetricsReport report = analyze_run(run_dir);
    std::cout << "kappa " << report.kappa << "  rho " << report.rho << "  sr " << report.sr
              << "  orthodev " << report.orthodev << "\n";
    std::cout << "metrics written under " << (std::filesystem::path(run_dir) / "metrics").string()
              << "\n";
    return kExitOk;
}

// Aggregate paired runs over several seeds: means for the continuous
// metrics, mode for the integer solutions rank.
json aggregate_paired(const std::vector<PairedRunResult>& results) {
    json agg;
    double kappa = 0.0, rho = 0.0, od = 0.0, ratio = 0.0;
    std::map<long long, int> sr_votes;
    for (const PairedRunResult& r : results) {
        kappa += r.deltas.kappa;
        rho += r.deltas.rho;
        od += r.deltas.orthodev;
        ratio += r.deltas.final_logits_norm_ratio;
        ++sr_votes[r.deltas.sr];
    }
    const double n = static_cast<double>(results.size());
    long long sr_mode = 0;
    int best = -1;
    for (const auto& [value, count] : sr_votes) {
        if (count > best) {
            best = count;
            sr_mode = value;
        }
    }
    agg["seeds"] = results.size();
    agg["mean_delta_kappa"] = kappa / n;
    agg["mean_delta_rho"] = rho / n;
    agg["mean_delta_orthodev"] = od / n;
    agg["mean_final_logits_norm_ratio"] = ratio / n;
    agg["mode_delta_sr"] = sr_mode;
    return agg;
}

int cmd_paired(const std::string& config_path, const std::string& overrides,
               const std::vector<std::uint64_t>& seeds, const GlobalOpts& g) {
    RunConfig base = load_run_config(config_path);
    apply_globals(base, g);
    std::vector<std::uint64_t> run_seeds = seeds;
    if (run_seeds.empty()) run_seeds.push_back(base.train.seed);

    std::vector<PairedRunResult> results;
    for (std::uint64_t seed : run_seeds) {
        RunConfig cfg = base;
        cfg.train.seed = seed;
        results.push_back(run_paired(cfg, overrides, true));
        const PairedRunResult& r = results.back();
        std::cout << "seed " << seed << ": dkappa " << r.deltas.kappa << "  drho "
                  << r.deltas.rho << "  dsr " << r.deltas.sr << "  growth ratio "
                  << r.deltas.final_logits_norm_ratio << "\n";
    }
    if (results.size() > 1) {
        const json agg = aggregate_paired(results);
        const std::filesystem::path dir =
            std::filesystem::path(base.output_dir) / (run_id(base) + "_paired");
        std::filesystem::create_directories(dir);
        atomic_write_text(dir / "aggregate.json", agg.dump(2));
        std::cout << agg.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_init_sweep(const std::string& config_path, const std::vector<double>& sigmas,
                   const GlobalOpts& g) {
    RunConfig base = load_run_config(config_path);
    apply_globals(base, g);
    const std::vector<InitSweepRow> rows = init_sweep(base, sigmas);
    const std::string csv = init_sweep_csv(rows);
    const std::filesystem::path dir(base.output_dir);
    std::filesystem::create_directories(dir);
    atomic_write_text(dir / "init_sweep.csv", csv);
    std::cout << csv;
    return kExitOk;
}

struct VerifyReport {
    json records = json::array();
    json summary;
    std::string csv;  // optional curve export
};

VerifyReport verify_gap_bound(std::size_t trials, std::uint64_t seed) {
    VerifyReport rep;
    Rng size_rng(derive_seed(seed, 0xB2));
    std::size_t violations = 0;
    double worst_slack = 1e300;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + size_rng.below(63);
        Rng entry_rng(derive_seed(seed, rng_stream::trial, t));
        Matrix m(n, n);
        for (double& v : m.data) v = entry_rng.normal();
        const BoundReportEntry e = gap_bound_check(softmax_with_temperature(m, 1.0));
        if (e.slack < -1e-9) ++violations;
        worst_slack = std::min(worst_slack, e.slack);
        rep.records.push_back(
            {{"n", e.n}, {"r", e.r}, {"gap", e.gap}, {"bound", e.bound}, {"slack", e.slack}});
    }
    rep.summary = {{"claim_id", "gap_bound"},
                   {"trials", trials},
                   {"violations", violations},
                   {"worst_slack", worst_slack}};
    return rep;
}

VerifyReport verify_rank2(const std::vector<std::size_t>& sizes, std::size_t seeds_per_size,
                          double c_max, const RankPolicy& policy) {
    VerifyReport rep;
    std::size_t violations = 0;
    double worst_dev = 0.0;
    std::size_t trials = 0;
    for (std::size_t n : sizes) {
        for (std::uint64_t seed = 0; seed < seeds_per_size; ++seed) {
            ++trials;
            const Rank2SearchResult r = rank2_full_rank_search(n, seed, c_max, policy);
            if (!r.c_found) ++violations;
            if (r.c_found) worst_dev = std::max(worst_dev, r.deviation_at_64c);
            rep.records.push_back({{"n", n},
                                   {"seed", seed},
                                   {"c_found", r.c_found ? json(*r.c_found) : json()},
                                   {"rank_at_c", r.rank_at_c},
                                   {"deviation_at_64c", r.deviation_at_64c}});
        }
    }
    rep.summary = {{"claim_id", "rank2_full"},
                   {"trials", trials},
                   {"violations", violations},
                   {"worst_slack", worst_dev}};
    return rep;
}

VerifyReport verify_nc_rank(std::size_t classes, std::size_t max_classes,
                            std::size_t per_class) {
    VerifyReport rep;
    std::size_t violations = 0;
    double worst_err = 0.0;
    std::size_t trials = 0;
    const std::size_t lo = max_classes ? 2 : classes;
    const std::size_t hi = max_classes ? max_classes : classes;
    for (std::size_t c = lo; c <= hi; ++c) {
        ++trials;
        const NcConstruction nc = nc_rank_construction(c, per_class, 1.0);
        const bool ok = nc.rank == c - 1 && nc.gram_error < 1e-9;
        if (!ok) ++violations;
        worst_err = std::max(worst_err, nc.gram_error);
        rep.records.push_back(
            {{"classes", c}, {"rank", nc.rank}, {"gram_error", nc.gram_error}, {"ok", ok}});
    }
    rep.summary = {{"claim_id", "nc_rank"},
                   {"trials", trials},
                   {"violations", violations},
                   {"worst_slack", worst_err}};
    return rep;
}

VerifyReport verify_scaling(const ScalingExperimentConfig& cfg, const RankPolicy& policy) {
    VerifyReport rep;
    const ScalingResult res = scaling_experiment(cfg, policy);
    rep.csv = "scale_or_temperature,k,mean_rank,gap\n";
    char buf[96];
    for (const ScalingCell& cell : res.cells) {
        std::snprintf(buf, sizeof(buf), "%.17g,%zu,%.17g,%.17g\n", cell.scale, cell.k,
                      cell.mean_post_rank, cell.mean_gap);
        rep.csv += buf;
        rep.records.push_back({{"k", cell.k},
                               {"scale", cell.scale},
                               {"mean_post_rank", cell.mean_post_rank},
                               {"mean_gap", cell.mean_gap}});
    }
    rep.summary = {{"claim_id", "scaling"},
                   {"trials", cfg.trials * cfg.k_values.size() * cfg.scales.size()},
                   {"violations", res.pre_rank_violations},
                   {"worst_slack", 0.0}};
    return rep;
}

VerifyReport verify_bifurcation(std::size_t n, double t_lo, double t_hi, std::size_t count,
                                std::uint64_t seed) {
    VerifyReport rep;
    std::vector<double> temps;
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        temps.push_back(t_lo * std::pow(t_hi / t_lo, f));
    }
    const auto sweep = bifurcation_sweep(n, temps, seed);
    rep.csv = "scale_or_temperature,k,mean_rank,gap\n";
    char buf[96];
    std::size_t gap_idx = 0;
    std::size_t max_rank = 0;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (sweep[i].gap < sweep[gap_idx].gap) gap_idx = i;
        max_rank = std::max(max_rank, sweep[i].rank);
        std::snprintf(buf, sizeof(buf), "%.17g,1,%zu,%.17g\n", sweep[i].temperature,
                      sweep[i].rank, sweep[i].gap);
        rep.csv += buf;
        rep.records.push_back({{"temperature", sweep[i].temperature},
                               {"same_mean", sweep[i].same_mean},
                               {"cross_mean", sweep[i].cross_mean},
                               {"gap", sweep[i].gap},
                               {"rank", sweep[i].rank}});
    }
    std::size_t best_dist = sweep.size();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (sweep[i].rank == max_rank) {
            best_dist = std::min(best_dist, i > gap_idx ? i - gap_idx : gap_idx - i);
        }
    }
    const std::size_t violations = best_dist <= 1 ? 0 : 1;
    rep.summary = {{"claim_id", "bifurcation"},
                   {"trials", sweep.size()},
                   {"violations", violations},
                   {"worst_slack", static_cast<double>(best_dist)}};
    return rep;
}

int write_verify_report(const VerifyReport& rep, const std::string& out_dir,
                        const std::string& claim) {
    json doc;
    doc["schema_version"] = 1;
    doc["summary"] = rep.summary;
    doc["records"] = rep.records;
    std::filesystem::create_directories(out_dir);
    atomic_write_text(std::filesystem::path(out_dir) / (claim + ".json"), doc.dump(2));
    if (!rep.csv.empty()) {
        atomic_write_text(std::filesystem::path(out_dir) / (claim + ".csv"), rep.csv);
    }
    std::cout << rep.summary.dump(2) << "\n";
    return rep.summary.at("violations").get<std::size_t>() == 0 ? kExitOk : kExitViolation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"softmax temperature / representation collapse toolkit"};
    app.require_subcommand(1);

    GlobalOpts globals;
    app.add_option("--seed", globals.seed, "override the config seed");
    app.add_option("--out", globals.out, "override the output directory");
    app.add_option("--rank-mode", globals.rank_mode, "relative|absolute");
    app.add_option("--rank-threshold", globals.rank_threshold, "rank policy threshold");

    std::string config_path;
    std::string run_dir;
    std::string overrides = "{}";
    std::vector<std::uint64_t> seeds;
    std::vector<double> sigmas;

    CLI::App* train_cmd = app.add_subcommand("train", "train one run and persist its trace");
    train_cmd->add_option("--config", config_path, "run config JSON")->required();

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "compute metrics for a persisted run");
    analyze_cmd->add_option("run_dir", run_dir, "run directory")->required();

    CLI::App* paired_cmd =
        app.add_subcommand("paired", "baseline vs variant on identical seed and data");
    paired_cmd->add_option("--config", config_path, "run config JSON")->required();
    paired_cmd->add_option("--variant", overrides, "TrainConfig override JSON object");
    paired_cmd->add_option("--seeds", seeds, "run the pair once per seed and aggregate");

    CLI::App* sweep_cmd = app.add_subcommand("init-sweep", "initial-norm vs final-rank sweep");
    sweep_cmd->add_option("--config", config_path, "run config JSON")->required();
    sweep_cmd->add_option("--sigmas", sigmas, "normal-init sigmas")->required();

    CLI::App* verify_cmd = app.add_subcommand("verify", "run a claim verifier");
    std::string claim;
    std::size_t trials = 10000;
    std::uint64_t vseed = 12345;
    std::vector<std::size_t> sizes = {4, 8, 16, 32};
    std::size_t seeds_per_size = 100;
    double c_max = 1e6;
    std::size_t classes = 10;
    std::size_t max_classes = 0;
    std::size_t per_class = 5;
    std::size_t sweep_n = 50;
    std::vector<std::size_t> k_values = {1, 2, 3, 4, 5};
    std::size_t sweep_trials = 20;
    double scale_lo = 1e-14, scale_hi = 1e3;
    std::size_t per_decade = 4;
    double temp_lo = 1e-2, temp_hi = 1e2;
    std::size_t temp_count = 30;
    std::string verify_out = "runs/verify";
    verify_cmd->add_option("claim", claim, "gap_bound|rank2_full|nc_rank|scaling|bifurcation")
        ->required();
    verify_cmd->add_option("--trials", trials, "gap_bound trials");
    verify_cmd->add_option("--vseed", vseed, "verifier seed");
    verify_cmd->add_option("--sizes", sizes, "rank2_full matrix sizes");
    verify_cmd->add_option("--seeds-per-size", seeds_per_size, "rank2_full draws per size");
    verify_cmd->add_option("--c-max", c_max, "rank2_full doubling cap");
    verify_cmd->add_option("--classes", classes, "nc_rank class count");
    verify_cmd->add_option("--max-classes", max_classes, "nc_rank sweep up to this count");
    verify_cmd->add_option("--per-class", per_class, "nc_rank samples per class");
    verify_cmd->add_option("--n", sweep_n, "scaling/bifurcation matrix side");
    verify_cmd->add_option("--k", k_values, "scaling target ranks");
    verify_cmd->add_option("--sweep-trials", sweep_trials, "scaling trials per k");
    verify_cmd->add_option("--scale-lo", scale_lo, "scaling grid low end");
    verify_cmd->add_option("--scale-hi", scale_hi, "scaling grid high end");
    verify_cmd->add_option("--per-decade", per_decade, "scaling grid points per decade");
    verify_cmd->add_option("--temp-lo", temp_lo, "bifurcation lowest temperature");
    verify_cmd->add_option("--temp-hi", temp_hi, "bifurcation highest temperature");
    verify_cmd->add_option("--temp-count", temp_count, "bifurcation grid size");
    verify_cmd->add_option("--verify-out", verify_out, "verifier report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*train_cmd) return cmd_train(config_path, globals);
        if (*analyze_cmd) return cmd_analyze(run_dir);
        if (*paired_cmd) return cmd_paired(config_path, overrides, seeds, globals);
        if (*sweep_cmd) return cmd_init_sweep(config_path, sigmas, globals);
        if (*verify_cmd) {
            if (globals.out) verify_out = *globals.out;
            const RankPolicy policy = policy_from_globals(globals);
            VerifyReport rep;
            if (claim == "gap_bound") {
                rep = verify_gap_bound(trials, vseed);
            } else if (claim == "rank2_full") {
                rep = verify_rank2(sizes, seeds_per_size, c_max, policy);
            } else if (claim == "nc_rank") {
                rep = verify_nc_rank(classes, max_classes, per_class);
            } else if (claim == "scaling") {
                ScalingExperimentConfig cfg;
                cfg.n = sweep_n;
                cfg.k_values = k_values;
                cfg.trials = sweep_trials;
                cfg.seed = vseed;
                cfg.scales = ScalingExperimentConfig::log_grid(scale_lo, scale_hi, per_decade);
                rep = verify_scaling(cfg, policy);
            } else if (claim == "bifurcation") {
                rep = verify_bifurcation(sweep_n, temp_lo, temp_hi, temp_count, vseed);
            } else {
                std::cerr << "unknown claim id: " << claim << "\n";
                return kExitConfig;
            }
            return write_verify_report(rep, verify_out, claim);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingError& e) {
        std::cerr << "training failed: " << e.what() << " (last valid epoch "
                  << e.last_valid_epoch << ")\n";
        return kExitTraining;
    } catch (const MissingArtifactsError& e) {
        std::cerr << "missing artifacts: " << e.what() << "\n";
        return kExitMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
