#pragma once
#include <string>
#include <vector>

#include "spectra/dataset.hpp"
#include "spectra/net.hpp"
#include "spectra/rank.hpp"

namespace spectra {

// Where a run's data comes from: synthetic blobs, a labeled CSV, or a
// CIFAR-10 binary batch. For file-backed sources `path` is the train (or
// ood) file and `test_path` the held-out file.
struct DataSource {
    enum class Kind { blobs, csv, cifar10 };
    Kind kind = Kind::blobs;
    // blobs parameters
    std::size_t classes = 10;
    std::size_t dim = 64;
    std::size_t per_class = 200;
    std::size_t test_per_class = 100;
    double spread = 0.25;
    // file parameters
    std::string path;
    std::string test_path;

    void validate() const;
};

// Blob seeds derive from the run seed so paired runs see identical data.
Dataset load_source(const DataSource& source, Split split, std::uint64_t seed);

struct RunConfig {
    NetSpec net;
    InitScheme init;
    TrainConfig train;
    DataSource dataset;
    DataSource ood_dataset;
    RankPolicy rank_policy;
    std::vector<std::size_t> record_epochs;
    std::string output_dir = "runs";

    void validate() const;
};

// Strict parser: every unknown key, at any nesting level, is a ConfigError
// naming the offending path; missing required fields name the field.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Normalized JSON with sorted keys and defaults filled in; hashing this
// gives the content-addressed run id.
std::string canonical_run_config_json(const RunConfig& config);
std::string run_id(const RunConfig& config);

// Apply a variant override object to the TrainConfig section only; any key
// that is not a TrainConfig field is a ConfigError.
RunConfig apply_train_overrides(const RunConfig& base, const std::string& overrides_json);

} // namespace spectra
