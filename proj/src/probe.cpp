#include "spectra/probe.hpp"

#include <algorithm>
#include <cmath>

#include "spectra/errors.hpp"
#include "spectra/net.hpp"
#include "spectra/rng.hpp"

namespace spectra {

namespace {

constexpr double kLr = 1e-3;
constexpr double kWeightDecay = 1e-3;
constexpr std::size_t kEpochs = 50;
constexpr std::size_t kBatch = 4096;
constexpr std::size_t kMaxFeatures = 10000;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& param, const std::vector<double>& grad, std::size_t t) {
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad[i] + kWeightDecay * param[i];
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
            param[i] -= kLr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
        }
    }
};

// W x + b broadcast over columns.
Matrix affine(const Matrix& w, const std::vector<double>& b, const Matrix& x) {
    Matrix z = multiply(w, x);
    for (std::size_t i = 0; i < z.rows; ++i) {
        double* zi = z.row_ptr(i);
        for (std::size_t j = 0; j < z.cols; ++j) zi[j] += b[i];
    }
    return z;
}

} // namespace

double train_probe_accuracy(const Matrix& features, const std::vector<std::size_t>& labels,
                            std::uint64_t seed) {
    require_nonempty(features, "train_probe");
    if (features.cols != labels.size()) {
        throw DimensionError("train_probe: feature columns != label count");
    }
    std::size_t classes = 0;
    for (std::size_t y : labels) classes = std::max(classes, y + 1);
    bool multi = false;
    for (std::size_t y : labels) {
        if (y != labels.front()) {
            multi = true;
            break;
        }
    }
    if (!multi) throw DegenerateLabelsError("train_probe: labels contain a single class");

    Rng rng(derive_seed(seed, rng_stream::probe));

    // Seed-fixed feature subsample when dimensionality exceeds the cap.
    Matrix feats = features;
    if (features.rows > kMaxFeatures) {
        std::vector<std::size_t> perm = rng.permutation(features.rows);
        perm.resize(kMaxFeatures);
        std::sort(perm.begin(), perm.end());
        feats = gather_rows(features, perm);
    }
    const std::size_t dim = feats.rows;
    const std::size_t n = feats.cols;
    if (n < 2) throw DimensionError("train_probe: need at least 2 samples");

    const std::vector<std::size_t> split_perm = rng.permutation(n);
    std::size_t n_train = (n * 4) / 5;
    if (n_train == 0) n_train = 1;
    if (n_train == n) n_train = n - 1;
    const std::vector<std::size_t> train_idx(split_perm.begin(), split_perm.begin() + n_train);
    const std::vector<std::size_t> eval_idx(split_perm.begin() + n_train, split_perm.end());

    Matrix w(classes, dim);
    std::vector<double> b(classes, 0.0);
    AdamState w_state(w.data.size());
    AdamState b_state(b.size());

    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= kEpochs; ++epoch) {
        Rng order_rng(derive_seed(seed, rng_stream::probe, epoch));
        const std::vector<std::size_t> order = order_rng.permutation(n_train);
        for (std::size_t start = 0; start < n_train; start += kBatch) {
            const std::size_t stop = std::min(n_train, start + kBatch);
            std::vector<std::size_t> idx(stop - start);
            for (std::size_t s = start; s < stop; ++s) idx[s - start] = train_idx[order[s]];
            const Matrix xb = gather_columns(feats, idx);
            const std::size_t bsz = idx.size();

            const Matrix probs = softmax_with_temperature(affine(w, b, xb), 1.0);
            Matrix dz = probs;
            const double inv = 1.0 / static_cast<double>(bsz);
            for (std::size_t j = 0; j < bsz; ++j) {
                dz(labels[idx[j]], j) -= 1.0;
            }
            for (double& v : dz.data) v *= inv;

            const Matrix gw = multiply(dz, transpose(xb));
            std::vector<double> gb(classes, 0.0);
            for (std::size_t k = 0; k < classes; ++k) {
                const double* row = dz.row_ptr(k);
                for (std::size_t j = 0; j < bsz; ++j) gb[k] += row[j];
            }
            ++step;
            w_state.step(w.data, gw.data, step);
            b_state.step(b, gb, step);
        }
    }

    const Matrix scores = affine(w, b, gather_columns(feats, eval_idx));
    std::vector<std::size_t> eval_labels(eval_idx.size());
    for (std::size_t i = 0; i < eval_idx.size(); ++i) eval_labels[i] = labels[eval_idx[i]];
    return accuracy(scores, eval_labels);
}

} // namespace spectra
