#pragma once
#include <cstdint>
#include <vector>

#include "spectra/dataset.hpp"
#include "spectra/errors.hpp"
#include "spectra/matrix.hpp"

namespace spectra {

// Dense ReLU network described by its layer widths:
// input dim, hidden widths..., class count. depth() is the number of weight
// matrices L; the final layer produces logits with no activation and no bias.
struct NetSpec {
    std::vector<std::size_t> layer_widths;

    std::size_t depth() const { return layer_widths.size() - 1; }
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t class_count() const { return layer_widths.back(); }
    void validate() const;
};

enum class InitKind { kaiming, framework_default, normal };

struct InitScheme {
    InitKind kind = InitKind::kaiming;
    double sigma = 0.1;  // used when kind == normal
    void validate() const;
};

enum class LossKind { cross_entropy, mse_after_softmax };

struct TrainConfig {
    double temperature = 1.0;
    double learning_rate = 0.05;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::size_t epochs = 1;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::cross_entropy;
    std::vector<std::size_t> lr_decay_milestones;
    double lr_decay_gamma = 0.1;
    void validate() const;
};

using Weights = std::vector<Matrix>;

// Column-wise softmax at temperature t, computed as softmax_1(e/t) with
// max-subtraction. Dividing first makes the temperature identity
// softmax_t(e) == softmax_1(e/t) hold bit-exactly.
Matrix softmax_with_temperature(const Matrix& logits, double t);

// Deterministic per seed. kaiming: N(0, 2/fan_in); framework_default:
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); normal: N(0, sigma^2).
Weights init_network(const NetSpec& spec, const InitScheme& scheme, std::uint64_t seed);

struct ForwardResult {
    std::vector<Matrix> pre_activations;  // Z^1..Z^L (Z^L = logits)
    std::vector<Matrix> activations;      // A^0 = batch, A^1..A^{L-1}
    Matrix logits;
    Matrix probs;
};

ForwardResult forward(const Weights& weights, const NetSpec& spec, const Matrix& batch,
                      double t);

// Exact gradients of the mean loss w.r.t. every weight matrix. The
// temperature sits inside the differentiated graph, so cross-entropy gives
// dL/dZ^L = (probs - onehot) / (t * batch).
Weights backward(const Weights& weights, const NetSpec& spec, const Matrix& batch,
                 const std::vector<std::size_t>& labels, double t, LossKind loss);

double cross_entropy_from_logits(const Matrix& logits, const std::vector<std::size_t>& labels,
                                 double t);
std::vector<double> per_sample_cross_entropy(const Matrix& logits,
                                             const std::vector<std::size_t>& labels, double t);
double mse_after_softmax_loss(const Matrix& probs, const std::vector<std::size_t>& labels);
double mean_loss(const Matrix& logits, const std::vector<std::size_t>& labels, double t,
                 LossKind loss);
// Fraction of columns whose argmax equals the label (ties -> lowest index).
double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels);

// Full state captured at one recorded epoch, measured on the frozen
// diagnostic batch (weights, Z^i, A^i, gradients, logits, probs) plus loss
// and accuracy over the whole training set.
struct EpochSnapshot {
    std::size_t epoch = 0;
    Weights weights;
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> activations;
    Weights gradients;
    Matrix logits;
    Matrix probs;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainTrace {
    NetSpec spec;
    TrainConfig config;
    Matrix diagnostic_batch;
    std::vector<std::size_t> diagnostic_labels;
    std::vector<EpochSnapshot> snapshots;

    const EpochSnapshot& initial() const { return snapshots.front(); }
    const EpochSnapshot& final() const { return snapshots.back(); }
};

// Divergence during train(): carries the snapshots recorded before the loss
// went non-finite so callers can preserve the partial trace.
struct DivergenceError : TrainingError {
    TrainTrace partial;
    DivergenceError(const std::string& msg, std::size_t last_epoch, TrainTrace trace)
        : TrainingError(msg, last_epoch), partial(std::move(trace)) {}
};

// First min(2048, n) samples, frozen before training begins.
std::pair<Matrix, std::vector<std::size_t>> diagnostic_batch(const Dataset& train_set);

// Minibatch SGD with momentum, weight decay and milestone LR decay. The
// shuffle order comes from a counter-based stream keyed on (seed, epoch).
// The epoch-0 snapshot is always recorded; record_epochs adds more.
// Divergence throws TrainingError carrying the last epoch with finite loss.
TrainTrace train(const NetSpec& spec, const InitScheme& init, const TrainConfig& config,
                 const Dataset& train_set, const Matrix& diag_batch,
                 const std::vector<std::size_t>& diag_labels,
                 const std::vector<std::size_t>& record_epochs);

} // namespace spectra
