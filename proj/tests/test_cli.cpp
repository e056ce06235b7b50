#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "spectra/config.hpp"
#include "spectra/errors.hpp"
#include "spectra/io.hpp"
#include "spectra/run.hpp"

using namespace spectra;
namespace fs = std::filesystem;

namespace {

const std::string kSmallConfig = R"({
  "net": {"layer_widths": [8, 12, 3]},
  "init": {"kind": "kaiming"},
  "train": {"temperature": 1.0, "learning_rate": 0.05, "momentum": 0.9,
            "epochs": 2, "batch_size": 16, "seed": 7},
  "dataset": {"kind": "blobs", "classes": 3, "dim": 8, "per_class": 30,
              "test_per_class": 20, "spread": 0.3},
  "record_epochs": [0, 1, 2],
  "output_dir": "OUTDIR"
})";

fs::path temp_root() {
    const fs::path p = fs::temp_directory_path() / "spectra_cli_tests";
    fs::create_directories(p);
    return p;
}

std::string small_config_text(const std::string& out_dir) {
    std::string text = kSmallConfig;
    const auto pos = text.find("OUTDIR");
    text.replace(pos, 6, out_dir);
    return text;
}

int run_cli(const std::string& args, const fs::path& capture = {}) {
    std::string cmd = std::string(SPECTRA_CLI_PATH) + " " + args;
    if (!capture.empty()) {
        cmd += " >" + capture.string() + " 2>&1";
    } else {
        cmd += " >/dev/null 2>&1";
    }
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("config parses, round-trips, and hashes stably") {
    const RunConfig cfg = parse_run_config(small_config_text("/tmp/x"));
    CHECK(cfg.net.depth() == 2);
    CHECK(cfg.train.epochs == 2);
    const std::string canon = canonical_run_config_json(cfg);
    const RunConfig again = parse_run_config(canon);
    CHECK(canonical_run_config_json(again) == canon);
    CHECK(run_id(cfg) == run_id(again));

    RunConfig tweaked = cfg;
    tweaked.train.temperature = 2.0;
    CHECK(run_id(tweaked) != run_id(cfg));
}

TEST_CASE("config rejects unknown keys and missing fields by name") {
    std::string text = small_config_text("/tmp/x");
    text.insert(text.rfind('}'), R"(, "unknown_top": 1)");
    CHECK_THROWS_WITH_AS(parse_run_config(text), "unknown key: unknown_top", ConfigError);

    const std::string no_temp = R"({
      "net": {"layer_widths": [4, 2]},
      "train": {"learning_rate": 0.1, "epochs": 1, "seed": 0},
      "dataset": {"kind": "blobs", "classes": 2, "dim": 4, "per_class": 5,
                  "test_per_class": 5, "spread": 0.2}
    })";
    CHECK_THROWS_WITH_AS(parse_run_config(no_temp),
                         "missing required field: train.temperature", ConfigError);

    const std::string typo = R"({
      "net": {"layer_widths": [4, 2]},
      "train": {"temperature": 1.0, "learning_rate": 0.1, "epochs": 1, "seed": 0,
                "learning_rte": 0.5},
      "dataset": {"kind": "blobs", "classes": 2, "dim": 4, "per_class": 5,
                  "test_per_class": 5, "spread": 0.2}
    })";
    CHECK_THROWS_WITH_AS(parse_run_config(typo), "unknown key: train.learning_rte",
                         ConfigError);
}

TEST_CASE("train overrides may touch only TrainConfig fields") {
    const RunConfig base = parse_run_config(small_config_text("/tmp/x"));
    const RunConfig hot = apply_train_overrides(base, R"({"temperature": 100.0})");
    CHECK(hot.train.temperature == 100.0);
    CHECK(hot.train.learning_rate == base.train.learning_rate);
    CHECK_THROWS_AS(apply_train_overrides(base, R"({"net": [4, 2]})"), ConfigError);
    CHECK_THROWS_AS(apply_train_overrides(base, R"({"spread": 0.5})"), ConfigError);
    CHECK_THROWS_AS(apply_train_overrides(base, R"({"seed": 9})"), ConfigError);
    CHECK_THROWS_AS(apply_train_overrides(base, R"({"temperature": -1.0})"), ConfigError);
}

TEST_CASE("cli train is idempotent and analyze is byte-stable") {
    const fs::path root = temp_root() / "train_case";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, small_config_text((root / "runs").string()));

    CHECK(run_cli("train --config " + cfg_path.string()) == 0);
    // one run directory with manifest + 3 snapshots (init + 2 epochs)
    fs::path run_dir;
    for (const auto& entry : fs::directory_iterator(root / "runs")) run_dir = entry.path();
    REQUIRE(!run_dir.empty());
    CHECK(fs::exists(run_dir / "manifest.json"));
    std::size_t snap_count = 0;
    for (const auto& entry : fs::directory_iterator(run_dir / "snapshots")) {
        (void)entry;
        ++snap_count;
    }
    CHECK(snap_count == 3);

    const std::string manifest_a = read_text(run_dir / "manifest.json");
    CHECK(run_cli("train --config " + cfg_path.string()) == 0);
    const std::string manifest_b = read_text(run_dir / "manifest.json");
    CHECK(fnv1a_hex(manifest_a) == fnv1a_hex(manifest_b));

    CHECK(run_cli("analyze " + run_dir.string()) == 0);
    const std::string metrics_a = read_text(run_dir / "metrics" / "metrics.json");
    CHECK(run_cli("analyze " + run_dir.string()) == 0);
    const std::string metrics_b = read_text(run_dir / "metrics" / "metrics.json");
    CHECK(metrics_a == metrics_b);

    // removing a snapshot file must fail with the missing-artifacts exit code
    fs::remove(run_dir / "snapshots" / "epoch_1" / "logits.csv");
    const fs::path log = root / "analyze_fail.log";
    CHECK(run_cli("analyze " + run_dir.string(), log) == 4);
    const std::string message = read_text(log);
    CHECK(message.find("epoch") != std::string::npos);
    CHECK(message.find('1') != std::string::npos);
}

TEST_CASE("cli rejects bad configs with exit 2 and names the field") {
    const fs::path root = temp_root() / "bad_config";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, R"({
      "net": {"layer_widths": [8, 12, 3]},
      "train": {"learning_rate": 0.05, "epochs": 2, "seed": 7},
      "dataset": {"kind": "blobs", "classes": 3, "dim": 8, "per_class": 30,
                  "test_per_class": 20, "spread": 0.3}
    })");
    const fs::path log = root / "fail.log";
    CHECK(run_cli("train --config " + cfg_path.string(), log) == 2);
    CHECK(read_text(log).find("train.temperature") != std::string::npos);

    CHECK(run_cli("verify definitely_not_a_claim", log) == 2);
}

TEST_CASE("cli train reports divergence with exit 3 and keeps the partial trace") {
    const fs::path root = temp_root() / "diverge";
    fs::remove_all(root);
    fs::create_directories(root);
    std::string text = small_config_text((root / "runs").string());
    const auto pos = text.find("\"learning_rate\": 0.05");
    text.replace(pos, std::string("\"learning_rate\": 0.05").size(),
                 "\"learning_rate\": 1e160");
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, text);

    CHECK(run_cli("train --config " + cfg_path.string()) == 3);
    fs::path run_dir;
    for (const auto& entry : fs::directory_iterator(root / "runs")) run_dir = entry.path();
    REQUIRE(!run_dir.empty());
    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "snapshots" / "epoch_0"));
}

TEST_CASE("cli paired: identical variant gives zero deltas") {
    const fs::path root = temp_root() / "paired_same";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, small_config_text((root / "runs").string()));

    CHECK(run_cli("paired --config " + cfg_path.string() + " --variant {}") == 0);
    fs::path paired_json;
    for (const auto& entry : fs::recursive_directory_iterator(root / "runs")) {
        if (entry.path().filename() == "paired.json") paired_json = entry.path();
    }
    REQUIRE(!paired_json.empty());
    const std::string text = read_text(paired_json);
    CHECK(text.find("\"kappa\": 0.0") != std::string::npos);
    CHECK(text.find("\"sr\": 0") != std::string::npos);
    CHECK(text.find("\"final_logits_norm_ratio\": 1.0") != std::string::npos);
}

TEST_CASE("cli init-sweep emits one csv row per sigma") {
    const fs::path root = temp_root() / "sweep";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, small_config_text((root / "runs").string()));

    CHECK(run_cli("init-sweep --config " + cfg_path.string() + " --sigmas 0.05") == 0);
    const std::string csv = read_text(root / "runs" / "init_sweep.csv");
    CHECK(csv.rfind("sigma,initial_logits_norm,final_sr\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : csv) {
        if (c == '\n') ++lines;
    }
    CHECK(lines == 2);  // header + one row
}

TEST_CASE("cli paired with --seeds aggregates and uses the SR mode") {
    const fs::path root = temp_root() / "paired_seeds";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg_path = root / "config.json";
    atomic_write_text(cfg_path, small_config_text((root / "runs").string()));

    CHECK(run_cli("paired --config " + cfg_path.string() +
                  " --variant {\"temperature\":4.0} --seeds 7 8") == 0);
    fs::path agg;
    for (const auto& entry : fs::recursive_directory_iterator(root / "runs")) {
        if (entry.path().filename() == "aggregate.json") agg = entry.path();
    }
    REQUIRE(!agg.empty());
    const std::string text = read_text(agg);
    CHECK(text.find("\"seeds\": 2") != std::string::npos);
    CHECK(text.find("mode_delta_sr") != std::string::npos);
    CHECK(text.find("mean_delta_kappa") != std::string::npos);
}

TEST_CASE("cli rank flags reach the verifiers and policies") {
    const fs::path root = temp_root() / "rank_flags";
    fs::remove_all(root);
    fs::create_directories(root);
    // coarse absolute threshold on the nc_rank verifier still yields C-1
    CHECK(run_cli("--rank-mode absolute --rank-threshold 1e-6 verify nc_rank --classes 6"
                  " --verify-out " +
                  (root / "v").string()) == 0);
    const std::string text = read_text(root / "v" / "nc_rank.json");
    CHECK(text.find("\"rank\": 5") != std::string::npos);

    CHECK(run_cli("--rank-mode sideways verify nc_rank --classes 4 --verify-out " +
                  (root / "v2").string()) == 2);
}

TEST_CASE("library init_sweep: initial norm scales monotonically with sigma") {
    RunConfig cfg = parse_run_config(small_config_text((temp_root() / "x").string()));
    cfg.record_epochs = {0, 2};
    const auto rows = init_sweep(cfg, {1e-4, 1e-2, 1e-1});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].initial_logits_norm < rows[1].initial_logits_norm);
    CHECK(rows[1].initial_logits_norm < rows[2].initial_logits_norm);
}
