#include "spectra/config.hpp"

#include <set>

#include <json.hpp>

#include "spectra/errors.hpp"
#include "spectra/io.hpp"
#include "spectra/rng.hpp"

namespace spectra {

using nlohmann::json;

void DataSource::validate() const {
    if (kind == Kind::blobs) {
        if (classes < 1 || dim < 1 || per_class < 1 || test_per_class < 1) {
            throw ConfigError("dataset: blob counts must be >= 1");
        }
        if (!(spread > 0.0)) throw ConfigError("dataset: blob spread must be > 0");
    } else {
        if (path.empty()) throw ConfigError("dataset: path required for file sources");
    }
}

Dataset load_source(const DataSource& source, Split split, std::uint64_t seed) {
    source.validate();
    switch (source.kind) {
        case DataSource::Kind::blobs: {
            const std::size_t per =
                split == Split::test ? source.test_per_class : source.per_class;
            return generate_blobs(source.classes, source.dim, per, source.spread, seed, split);
        }
        case DataSource::Kind::csv: {
            if (split == Split::test) {
                if (source.test_path.empty()) {
                    throw ConfigError("dataset: test_path required for csv test split");
                }
                return load_dataset_csv(source.test_path, split);
            }
            return load_dataset_csv(source.path, split);
        }
        case DataSource::Kind::cifar10: {
            if (split == Split::test) {
                if (source.test_path.empty()) {
                    throw ConfigError("dataset: test_path required for cifar test split");
                }
                return load_cifar10(source.test_path, split);
            }
            return load_cifar10(source.path, split);
        }
    }
    throw ConfigError("dataset: unknown kind");
}

void RunConfig::validate() const {
    net.validate();
    init.validate();
    train.validate();
    dataset.validate();
    ood_dataset.validate();
    rank_policy.validate();
    for (std::size_t e : record_epochs) {
        if (e > train.epochs) {
            throw ConfigError("record_epochs: epoch " + std::to_string(e) +
                              " beyond train.epochs");
        }
    }
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    if (dataset.kind == DataSource::Kind::blobs && dataset.dim != net.input_dim()) {
        throw ConfigError("dataset: blob dim != net input width");
    }
    if (dataset.kind == DataSource::Kind::blobs && dataset.classes != net.class_count()) {
        throw ConfigError("dataset: blob classes != net output width");
    }
}

namespace {

[[noreturn]] void missing(const std::string& path) {
    throw ConfigError("missing required field: " + path);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (allowed.count(key) == 0) {
            throw ConfigError("unknown key: " + where + key);
        }
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const T& fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) missing(where + key);
    return obj.at(key).get<T>();
}

InitKind init_kind_from_name(const std::string& name) {
    if (name == "kaiming") return InitKind::kaiming;
    if (name == "framework_default") return InitKind::framework_default;
    if (name == "normal") return InitKind::normal;
    throw ConfigError("init.kind: unknown value '" + name + "'");
}

const char* init_kind_name(InitKind kind) {
    switch (kind) {
        case InitKind::kaiming: return "kaiming";
        case InitKind::framework_default: return "framework_default";
        case InitKind::normal: return "normal";
    }
    return "kaiming";
}

LossKind loss_from_name(const std::string& name) {
    if (name == "cross_entropy") return LossKind::cross_entropy;
    if (name == "mse_after_softmax") return LossKind::mse_after_softmax;
    throw ConfigError("train.loss: unknown value '" + name + "'");
}

const char* loss_name(LossKind k) {
    return k == LossKind::cross_entropy ? "cross_entropy" : "mse_after_softmax";
}

DataSource parse_source(const json& obj, const std::string& where) {
    DataSource src;
    const std::string kind = require<std::string>(obj, "kind", where);
    if (kind == "blobs") {
        src.kind = DataSource::Kind::blobs;
        reject_unknown(obj,
                       {"kind", "classes", "dim", "per_class", "test_per_class", "spread"},
                       where);
        src.classes = get_or<std::size_t>(obj, "classes", src.classes);
        src.dim = get_or<std::size_t>(obj, "dim", src.dim);
        src.per_class = get_or<std::size_t>(obj, "per_class", src.per_class);
        src.test_per_class = get_or<std::size_t>(obj, "test_per_class", src.test_per_class);
        src.spread = get_or<double>(obj, "spread", src.spread);
    } else if (kind == "csv" || kind == "cifar10") {
        src.kind = kind == "csv" ? DataSource::Kind::csv : DataSource::Kind::cifar10;
        reject_unknown(obj, {"kind", "path", "test_path"}, where);
        src.path = require<std::string>(obj, "path", where);
        src.test_path = get_or<std::string>(obj, "test_path", std::string{});
    } else {
        throw ConfigError(where + "kind: unknown value '" + kind + "'");
    }
    return src;
}

json source_json(const DataSource& src) {
    json j;
    switch (src.kind) {
        case DataSource::Kind::blobs:
            j["kind"] = "blobs";
            j["classes"] = src.classes;
            j["dim"] = src.dim;
            j["per_class"] = src.per_class;
            j["test_per_class"] = src.test_per_class;
            j["spread"] = src.spread;
            break;
        case DataSource::Kind::csv:
        case DataSource::Kind::cifar10:
            j["kind"] = src.kind == DataSource::Kind::csv ? "csv" : "cifar10";
            j["path"] = src.path;
            j["test_path"] = src.test_path;
            break;
    }
    return j;
}

TrainConfig parse_train(const json& obj) {
    TrainConfig train;
    reject_unknown(obj,
                   {"temperature", "learning_rate", "momentum", "weight_decay", "epochs",
                    "batch_size", "seed", "loss", "lr_decay_milestones", "lr_decay_gamma"},
                   "train.");
    if (!obj.contains("temperature")) missing("train.temperature");
    train.temperature = obj.at("temperature").get<double>();
    train.learning_rate = require<double>(obj, "learning_rate", "train.");
    train.epochs = require<std::size_t>(obj, "epochs", "train.");
    train.seed = require<std::uint64_t>(obj, "seed", "train.");
    train.momentum = get_or<double>(obj, "momentum", 0.0);
    train.weight_decay = get_or<double>(obj, "weight_decay", 0.0);
    train.batch_size = get_or<std::size_t>(obj, "batch_size", 128);
    train.loss = loss_from_name(get_or<std::string>(obj, "loss", "cross_entropy"));
    train.lr_decay_milestones =
        get_or<std::vector<std::size_t>>(obj, "lr_decay_milestones", {});
    train.lr_decay_gamma = get_or<double>(obj, "lr_decay_gamma", 0.1);
    return train;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(root,
                   {"net", "init", "train", "dataset", "ood_dataset", "rank_policy",
                    "record_epochs", "output_dir"},
                   "");
    RunConfig cfg;
    if (!root.contains("net")) missing("net");
    reject_unknown(root.at("net"), {"layer_widths"}, "net.");
    cfg.net.layer_widths =
        require<std::vector<std::size_t>>(root.at("net"), "layer_widths", "net.");

    if (root.contains("init")) {
        reject_unknown(root.at("init"), {"kind", "sigma"}, "init.");
        cfg.init.kind =
            init_kind_from_name(get_or<std::string>(root.at("init"), "kind", "kaiming"));
        cfg.init.sigma = get_or<double>(root.at("init"), "sigma", 0.1);
    }

    if (!root.contains("train")) missing("train");
    cfg.train = parse_train(root.at("train"));

    if (!root.contains("dataset")) missing("dataset");
    cfg.dataset = parse_source(root.at("dataset"), "dataset.");
    if (root.contains("ood_dataset")) {
        cfg.ood_dataset = parse_source(root.at("ood_dataset"), "ood_dataset.");
    } else if (cfg.dataset.kind == DataSource::Kind::blobs) {
        cfg.ood_dataset = cfg.dataset;  // ood split redraws centers anyway
    } else {
        missing("ood_dataset");
    }

    if (root.contains("rank_policy")) {
        reject_unknown(root.at("rank_policy"), {"mode", "threshold"}, "rank_policy.");
        const std::string mode =
            get_or<std::string>(root.at("rank_policy"), "mode", "relative");
        if (mode == "relative") {
            cfg.rank_policy.mode = RankPolicy::Mode::relative;
        } else if (mode == "absolute") {
            cfg.rank_policy.mode = RankPolicy::Mode::absolute;
        } else {
            throw ConfigError("rank_policy.mode: unknown value '" + mode + "'");
        }
        cfg.rank_policy.threshold = get_or<double>(root.at("rank_policy"), "threshold", 1.0);
    }

    cfg.record_epochs = get_or<std::vector<std::size_t>>(root, "record_epochs",
                                                         {0, cfg.train.epochs});
    cfg.output_dir = get_or<std::string>(root, "output_dir", "runs");

    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_text(path));
}

std::string canonical_run_config_json(const RunConfig& config) {
    json j;
    j["net"]["layer_widths"] = config.net.layer_widths;
    j["init"]["kind"] = init_kind_name(config.init.kind);
    j["init"]["sigma"] = config.init.sigma;
    j["train"]["temperature"] = config.train.temperature;
    j["train"]["learning_rate"] = config.train.learning_rate;
    j["train"]["momentum"] = config.train.momentum;
    j["train"]["weight_decay"] = config.train.weight_decay;
    j["train"]["epochs"] = config.train.epochs;
    j["train"]["batch_size"] = config.train.batch_size;
    j["train"]["seed"] = config.train.seed;
    j["train"]["loss"] = loss_name(config.train.loss);
    j["train"]["lr_decay_milestones"] = config.train.lr_decay_milestones;
    j["train"]["lr_decay_gamma"] = config.train.lr_decay_gamma;
    j["dataset"] = source_json(config.dataset);
    j["ood_dataset"] = source_json(config.ood_dataset);
    j["rank_policy"]["mode"] =
        config.rank_policy.mode == RankPolicy::Mode::relative ? "relative" : "absolute";
    j["rank_policy"]["threshold"] = config.rank_policy.threshold;
    j["record_epochs"] = config.record_epochs;
    j["output_dir"] = config.output_dir;
    return j.dump(2);
}

std::string run_id(const RunConfig& config) {
    return fnv1a_hex(canonical_run_config_json(config));
}

RunConfig apply_train_overrides(const RunConfig& base, const std::string& overrides_json) {
    json patch;
    try {
        patch = json::parse(overrides_json);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("overrides: invalid JSON: ") + e.what());
    }
    if (!patch.is_object()) throw ConfigError("overrides: expected a JSON object");
    // Rebuild the train section with the patch applied; parse_train rejects
    // anything that is not a TrainConfig field, which enforces the
    // only-TrainConfig-may-differ contract.
    json train;
    train["temperature"] = base.train.temperature;
    train["learning_rate"] = base.train.learning_rate;
    train["momentum"] = base.train.momentum;
    train["weight_decay"] = base.train.weight_decay;
    train["epochs"] = base.train.epochs;
    train["batch_size"] = base.train.batch_size;
    train["seed"] = base.train.seed;
    train["loss"] = loss_name(base.train.loss);
    train["lr_decay_milestones"] = base.train.lr_decay_milestones;
    train["lr_decay_gamma"] = base.train.lr_decay_gamma;
    for (const auto& [key, value] : patch.items()) {
        if (key == "seed") {
            throw ConfigError("overrides: seed must stay shared between paired runs");
        }
        if (!train.contains(key)) {
            throw ConfigError("overrides: '" + key + "' is not a TrainConfig field");
        }
        train[key] = value;
    }
    RunConfig variant = base;
    variant.train = parse_train(train);
    try {
        variant.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("overrides: ") + e.what());
    }
    return variant;
}

} // namespace spectra
