#include "spectra/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spectra/errors.hpp"
#include "spectra/rng.hpp"

namespace spectra {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        case Split::ood: return "ood";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    if (name == "ood") return Split::ood;
    throw ValidationError("unknown split name: " + name);
}

void Dataset::validate() const {
    if (features.cols != labels.size()) {
        throw ValidationError("Dataset: feature column count != label count");
    }
    if (class_count == 0) throw ValidationError("Dataset: class_count must be >= 1");
    for (std::size_t y : labels) {
        if (y >= class_count) throw ValidationError("Dataset: label out of range");
    }
    require_finite(features, "Dataset features");
}

namespace {

Matrix draw_centers(std::size_t class_count, std::size_t dim, Rng& rng) {
    Matrix centers(dim, class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                centers(i, c) = rng.normal();
                norm2 += centers(i, c) * centers(i, c);
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t i = 0; i < dim; ++i) centers(i, c) *= inv;
    }
    return centers;
}

} // namespace

Dataset generate_blobs(std::size_t class_count, std::size_t dim, std::size_t per_class,
                       double spread, std::uint64_t seed, Split split) {
    if (class_count < 1 || dim < 1 || per_class < 1) {
        throw ValidationError("generate_blobs: counts must be >= 1");
    }
    if (!(spread > 0.0)) throw ValidationError("generate_blobs: spread must be > 0");

    const std::uint64_t center_stream =
        (split == Split::ood) ? rng_stream::blob_centers_ood : rng_stream::blob_centers;
    Rng center_rng(derive_seed(seed, center_stream));
    const Matrix centers = draw_centers(class_count, dim, center_rng);

    Rng noise_rng(derive_seed(seed, rng_stream::blob_noise, static_cast<std::uint64_t>(split)));
    Dataset ds;
    ds.class_count = class_count;
    ds.split = split;
    ds.features = Matrix(dim, class_count * per_class);
    ds.labels.resize(class_count * per_class);
    std::size_t col = 0;
    for (std::size_t c = 0; c < class_count; ++c) {
        for (std::size_t s = 0; s < per_class; ++s) {
            for (std::size_t i = 0; i < dim; ++i) {
                ds.features(i, col) = centers(i, c) + spread * noise_rng.normal();
            }
            ds.labels[col] = c;
            ++col;
        }
    }
    return ds;
}

Dataset load_dataset_csv(const std::filesystem::path& path, Split split) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset csv: " + path.string());
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ss, tok, ',')) toks.push_back(tok);
        if (toks.empty()) continue;
        if (first) {
            first = false;
            char* end = nullptr;
            std::strtod(toks[0].c_str(), &end);
            const bool numeric = end != toks[0].c_str() && *end == '\0';
            if (!numeric) continue;  // header row
        }
        char* end = nullptr;
        const double label_val = std::strtod(toks[0].c_str(), &end);
        if (end == toks[0].c_str() || label_val < 0.0 || label_val != std::floor(label_val)) {
            throw ValidationError("dataset csv: bad label token '" + toks[0] + "'");
        }
        std::vector<double> feats;
        feats.reserve(toks.size() - 1);
        for (std::size_t i = 1; i < toks.size(); ++i) {
            char* fe = nullptr;
            const double v = std::strtod(toks[i].c_str(), &fe);
            if (fe == toks[i].c_str()) {
                throw ValidationError("dataset csv: bad feature token '" + toks[i] + "'");
            }
            feats.push_back(v);
        }
        if (!rows.empty() && feats.size() != rows.front().size()) {
            throw ValidationError("dataset csv: inconsistent feature counts");
        }
        rows.push_back(std::move(feats));
        labels.push_back(static_cast<std::size_t>(label_val));
    }
    if (rows.empty()) throw ValidationError("dataset csv: no samples in " + path.string());
    Dataset ds;
    ds.split = split;
    ds.features = Matrix(rows.front().size(), rows.size());
    ds.labels = labels;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (std::size_t i = 0; i < rows[j].size(); ++i) ds.features(i, j) = rows[j][i];
    }
    std::size_t max_label = 0;
    for (std::size_t y : labels) max_label = std::max(max_label, y);
    ds.class_count = max_label + 1;
    ds.validate();
    return ds;
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write dataset csv: " + path.string());
    char buf[32];
    for (std::size_t j = 0; j < ds.size(); ++j) {
        out << ds.labels[j];
        for (std::size_t i = 0; i < ds.features.rows; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

Dataset load_cifar10(const std::filesystem::path& path, Split split) {
    constexpr std::size_t kRecord = 3073;
    constexpr std::size_t kPixels = 3072;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open cifar batch: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes == 0 || bytes % kRecord != 0) {
        throw ValidationError("cifar batch size " + std::to_string(bytes) +
                              " is not a multiple of 3073");
    }
    in.seekg(0);
    const std::size_t n = bytes / kRecord;
    Dataset ds;
    ds.split = split;
    ds.class_count = 10;
    ds.features = Matrix(kPixels, n);
    ds.labels.resize(n);
    std::vector<unsigned char> rec(kRecord);
    for (std::size_t j = 0; j < n; ++j) {
        in.read(reinterpret_cast<char*>(rec.data()), kRecord);
        if (!in) throw ValidationError("cifar batch: short read");
        if (rec[0] > 9) throw ValidationError("cifar batch: label byte out of range");
        ds.labels[j] = rec[0];
        for (std::size_t i = 0; i < kPixels; ++i) {
            ds.features(i, j) = static_cast<double>(rec[i + 1]) / 255.0;
        }
    }
    return ds;
}

} // namespace spectra
