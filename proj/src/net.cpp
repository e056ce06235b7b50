#include "spectra/net.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spectra/errors.hpp"
#include "spectra/rng.hpp"

namespace spectra {

void NetSpec::validate() const {
    if (layer_widths.size() < 2) {
        throw ValidationError("NetSpec: need at least input and output widths");
    }
    for (std::size_t w : layer_widths) {
        if (w < 1) throw ValidationError("NetSpec: all widths must be >= 1");
    }
}

void InitScheme::validate() const {
    if (kind == InitKind::normal && !(sigma > 0.0)) {
        throw ValidationError("InitScheme: sigma must be > 0 for normal init");
    }
}

void TrainConfig::validate() const {
    if (!(temperature > 0.0)) throw ValidationError("TrainConfig: temperature must be > 0");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be > 0");
    if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ValidationError("TrainConfig: momentum must be in [0, 1)");
    }
    if (weight_decay < 0.0) throw ValidationError("TrainConfig: weight_decay must be >= 0");
    if (lr_decay_gamma < 0.0) throw ValidationError("TrainConfig: lr_decay_gamma must be >= 0");
    for (std::size_t m : lr_decay_milestones) {
        if (m < 1 || m > epochs) {
            throw ValidationError("TrainConfig: milestone " + std::to_string(m) +
                                  " outside [1, epochs]");
        }
    }
}

Matrix softmax_with_temperature(const Matrix& logits, double t) {
    if (!(t > 0.0)) throw ValidationError("softmax: temperature must be > 0");
    require_nonempty(logits, "softmax");
    require_finite(logits, "softmax");
    Matrix scaled = logits;
    for (double& v : scaled.data) v /= t;
    Matrix out(scaled.rows, scaled.cols);
    for (std::size_t j = 0; j < scaled.cols; ++j) {
        double mx = scaled(0, j);
        for (std::size_t i = 1; i < scaled.rows; ++i) mx = std::max(mx, scaled(i, j));
        double sum = 0.0;
        for (std::size_t i = 0; i < scaled.rows; ++i) {
            const double e = std::exp(scaled(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (std::size_t i = 0; i < scaled.rows; ++i) out(i, j) /= sum;
    }
    return out;
}

Weights init_network(const NetSpec& spec, const InitScheme& scheme, std::uint64_t seed) {
    spec.validate();
    scheme.validate();
    Rng rng(derive_seed(seed, rng_stream::init_weights));
    Weights weights;
    weights.reserve(spec.depth());
    for (std::size_t l = 0; l < spec.depth(); ++l) {
        const std::size_t fan_in = spec.layer_widths[l];
        const std::size_t fan_out = spec.layer_widths[l + 1];
        Matrix w(fan_out, fan_in);
        switch (scheme.kind) {
            case InitKind::kaiming: {
                const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
                for (double& v : w.data) v = scale * rng.normal();
                break;
            }
            case InitKind::framework_default: {
                const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
                for (double& v : w.data) v = rng.uniform(-bound, bound);
                break;
            }
            case InitKind::normal: {
                for (double& v : w.data) v = scheme.sigma * rng.normal();
                break;
            }
        }
        weights.push_back(std::move(w));
    }
    return weights;
}

namespace {

void check_shapes(const Weights& weights, const NetSpec& spec, const Matrix& batch) {
    spec.validate();
    if (weights.size() != spec.depth()) {
        throw DimensionError("forward: weight count != spec depth");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows != spec.layer_widths[l + 1] ||
            weights[l].cols != spec.layer_widths[l]) {
            throw DimensionError("forward: weight " + std::to_string(l) + " shape mismatch");
        }
    }
    if (batch.rows != spec.input_dim()) {
        throw DimensionError("forward: batch rows " + std::to_string(batch.rows) +
                             " != input width " + std::to_string(spec.input_dim()));
    }
}

Matrix relu(const Matrix& z) {
    Matrix a = z;
    for (double& v : a.data) v = v > 0.0 ? v : 0.0;
    return a;
}

Matrix onehot(const std::vector<std::size_t>& labels, std::size_t classes) {
    Matrix y(classes, labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] >= classes) throw ValidationError("label out of range");
        y(labels[j], j) = 1.0;
    }
    return y;
}

} // namespace

ForwardResult forward(const Weights& weights, const NetSpec& spec, const Matrix& batch,
                      double t) {
    check_shapes(weights, spec, batch);
    ForwardResult fr;
    fr.activations.reserve(spec.depth());
    fr.pre_activations.reserve(spec.depth());
    fr.activations.push_back(batch);
    for (std::size_t l = 0; l < spec.depth(); ++l) {
        Matrix z = multiply(weights[l], fr.activations.back());
        if (l + 1 < spec.depth()) {
            fr.activations.push_back(relu(z));
        } else {
            fr.logits = z;
        }
        fr.pre_activations.push_back(std::move(z));
    }
    fr.probs = softmax_with_temperature(fr.logits, t);
    return fr;
}

Weights backward(const Weights& weights, const NetSpec& spec, const Matrix& batch,
                 const std::vector<std::size_t>& labels, double t, LossKind loss) {
    if (labels.size() != batch.cols) {
        throw DimensionError("backward: label count != batch columns");
    }
    const ForwardResult fr = forward(weights, spec, batch, t);
    const std::size_t classes = spec.class_count();
    const std::size_t bsz = batch.cols;
    const Matrix y = onehot(labels, classes);

    Matrix dz(classes, bsz);
    if (loss == LossKind::cross_entropy) {
        const double inv = 1.0 / (t * static_cast<double>(bsz));
        for (std::size_t i = 0; i < dz.data.size(); ++i) {
            dz.data[i] = (fr.probs.data[i] - y.data[i]) * inv;
        }
    } else {
        // d/dZ of mean_j sum_k (p_kj - y_kj)^2 through the softmax Jacobian.
        const double inv_b = 1.0 / static_cast<double>(bsz);
        for (std::size_t j = 0; j < bsz; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = 2.0 * (fr.probs(k, j) - y(k, j)) * inv_b;
                dot += g * fr.probs(k, j);
            }
            for (std::size_t k = 0; k < classes; ++k) {
                const double g = 2.0 * (fr.probs(k, j) - y(k, j)) * inv_b;
                dz(k, j) = fr.probs(k, j) * (g - dot) / t;
            }
        }
    }

    Weights grads(spec.depth());
    for (std::size_t l = spec.depth(); l-- > 0;) {
        grads[l] = multiply(dz, transpose(fr.activations[l]));
        if (l > 0) {
            Matrix da = multiply(transpose(weights[l]), dz);
            const Matrix& z_prev = fr.pre_activations[l - 1];
            for (std::size_t i = 0; i < da.data.size(); ++i) {
                da.data[i] = z_prev.data[i] > 0.0 ? da.data[i] : 0.0;
            }
            dz = std::move(da);
        }
    }
    return grads;
}

double cross_entropy_from_logits(const Matrix& logits, const std::vector<std::size_t>& labels,
                                 double t) {
    const std::vector<double> losses = per_sample_cross_entropy(logits, labels, t);
    double sum = 0.0;
    for (double v : losses) sum += v;
    return sum / static_cast<double>(losses.size());
}

std::vector<double> per_sample_cross_entropy(const Matrix& logits,
                                             const std::vector<std::size_t>& labels, double t) {
    if (labels.size() != logits.cols) {
        throw DimensionError("cross_entropy: label count != logits columns");
    }
    if (!(t > 0.0)) throw ValidationError("cross_entropy: temperature must be > 0");
    std::vector<double> out(labels.size());
    for (std::size_t j = 0; j < logits.cols; ++j) {
        double mx = logits(0, j) / t;
        for (std::size_t i = 1; i < logits.rows; ++i) mx = std::max(mx, logits(i, j) / t);
        double sum = 0.0;
        for (std::size_t i = 0; i < logits.rows; ++i) {
            sum += std::exp(logits(i, j) / t - mx);
        }
        out[j] = -(logits(labels[j], j) / t - mx - std::log(sum));
    }
    return out;
}

double mse_after_softmax_loss(const Matrix& probs, const std::vector<std::size_t>& labels) {
    if (labels.size() != probs.cols) {
        throw DimensionError("mse loss: label count != probs columns");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.cols; ++j) {
        for (std::size_t i = 0; i < probs.rows; ++i) {
            const double target = labels[j] == i ? 1.0 : 0.0;
            const double d = probs(i, j) - target;
            sum += d * d;
        }
    }
    return sum / static_cast<double>(probs.cols);
}

double mean_loss(const Matrix& logits, const std::vector<std::size_t>& labels, double t,
                 LossKind loss) {
    if (loss == LossKind::cross_entropy) {
        return cross_entropy_from_logits(logits, labels, t);
    }
    return mse_after_softmax_loss(softmax_with_temperature(logits, t), labels);
}

double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels) {
    if (labels.size() != scores.cols) {
        throw DimensionError("accuracy: label count != score columns");
    }
    std::size_t hits = 0;
    for (std::size_t j = 0; j < scores.cols; ++j) {
        std::size_t arg = 0;
        double best = scores(0, j);
        for (std::size_t i = 1; i < scores.rows; ++i) {
            if (scores(i, j) > best) {
                best = scores(i, j);
                arg = i;
            }
        }
        if (arg == labels[j]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::pair<Matrix, std::vector<std::size_t>> diagnostic_batch(const Dataset& train_set) {
    const std::size_t n = std::min<std::size_t>(2048, train_set.size());
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> labels(train_set.labels.begin(), train_set.labels.begin() + n);
    return {gather_columns(train_set.features, idx), labels};
}

namespace {

EpochSnapshot take_snapshot(std::size_t epoch, const Weights& weights, const NetSpec& spec,
                            const TrainConfig& config, const Dataset& train_set,
                            const Matrix& diag_batch,
                            const std::vector<std::size_t>& diag_labels) {
    EpochSnapshot snap;
    snap.epoch = epoch;
    snap.weights = weights;
    ForwardResult fr = forward(weights, spec, diag_batch, config.temperature);
    snap.gradients =
        backward(weights, spec, diag_batch, diag_labels, config.temperature, config.loss);
    snap.pre_activations = std::move(fr.pre_activations);
    snap.activations = std::move(fr.activations);
    snap.logits = std::move(fr.logits);
    snap.probs = std::move(fr.probs);
    const ForwardResult full = forward(weights, spec, train_set.features, config.temperature);
    snap.train_loss = mean_loss(full.logits, train_set.labels, config.temperature, config.loss);
    snap.train_accuracy = accuracy(full.probs, train_set.labels);
    return snap;
}

} // namespace

TrainTrace train(const NetSpec& spec, const InitScheme& init, const TrainConfig& config,
                 const Dataset& train_set, const Matrix& diag_batch,
                 const std::vector<std::size_t>& diag_labels,
                 const std::vector<std::size_t>& record_epochs) {
    spec.validate();
    train_set.validate();
    if (train_set.features.rows != spec.input_dim()) {
        throw DimensionError("train: dataset dim != net input width");
    }
    if (train_set.class_count != spec.class_count()) {
        throw DimensionError("train: dataset classes != net output width");
    }
    std::set<std::size_t> record(record_epochs.begin(), record_epochs.end());
    record.insert(0);
    for (std::size_t e : record) {
        if (e > config.epochs) {
            throw ValidationError("train: record epoch " + std::to_string(e) +
                                  " beyond epochs " + std::to_string(config.epochs));
        }
    }

    TrainTrace trace;
    trace.spec = spec;
    trace.config = config;
    trace.diagnostic_batch = diag_batch;
    trace.diagnostic_labels = diag_labels;

    Weights weights = init_network(spec, init, config.seed);
    Weights velocity;
    for (const Matrix& w : weights) velocity.emplace_back(w.rows, w.cols);

    trace.snapshots.push_back(
        take_snapshot(0, weights, spec, config, train_set, diag_batch, diag_labels));

    const std::size_t n = train_set.size();
    double lr = config.learning_rate;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (std::find(config.lr_decay_milestones.begin(), config.lr_decay_milestones.end(),
                      epoch) != config.lr_decay_milestones.end()) {
            lr *= config.lr_decay_gamma;
        }
        Rng shuffle_rng(derive_seed(config.seed, rng_stream::shuffle, epoch));
        const std::vector<std::size_t> perm = shuffle_rng.permutation(n);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::vector<std::size_t> idx(perm.begin() + start, perm.begin() + stop);
            const Matrix xb = gather_columns(train_set.features, idx);
            std::vector<std::size_t> yb(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = train_set.labels[idx[i]];

            Weights grads;
            try {
                grads = backward(weights, spec, xb, yb, config.temperature, config.loss);
            } catch (const ValidationError& e) {
                throw DivergenceError("train: diverged at epoch " + std::to_string(epoch) +
                                          " (" + e.what() + ")",
                                      epoch - 1, std::move(trace));
            }
            bool finite = true;
            for (const Matrix& g : grads) {
                for (double v : g.data) {
                    if (!std::isfinite(v)) {
                        finite = false;
                        break;
                    }
                }
                if (!finite) break;
            }
            if (!finite) {
                throw DivergenceError("train: non-finite gradient at epoch " +
                                          std::to_string(epoch),
                                      epoch - 1, std::move(trace));
            }
            for (std::size_t l = 0; l < weights.size(); ++l) {
                double* w = weights[l].data.data();
                double* v = velocity[l].data.data();
                const double* g = grads[l].data.data();
                const std::size_t sz = weights[l].data.size();
                for (std::size_t i = 0; i < sz; ++i) {
                    const double step = g[i] + config.weight_decay * w[i];
                    v[i] = config.momentum * v[i] + step;
                    w[i] -= lr * v[i];
                }
            }
        }
        if (record.count(epoch) != 0) {
            EpochSnapshot snap;
            try {
                snap = take_snapshot(epoch, weights, spec, config, train_set, diag_batch,
                                     diag_labels);
            } catch (const ValidationError& e) {
                const std::size_t last = trace.snapshots.back().epoch;
                throw DivergenceError("train: diverged at epoch " + std::to_string(epoch) +
                                          " (" + e.what() + ")",
                                      last, std::move(trace));
            }
            if (!std::isfinite(snap.train_loss)) {
                const std::size_t last = trace.snapshots.back().epoch;
                throw DivergenceError("train: loss diverged at epoch " + std::to_string(epoch),
                                      last, std::move(trace));
            }
            trace.snapshots.push_back(std::move(snap));
        }
    }
    return trace;
}

} // namespace spectra
