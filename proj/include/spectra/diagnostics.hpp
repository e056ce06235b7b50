#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spectra/dataset.hpp"
#include "spectra/matrix.hpp"
#include "spectra/net.hpp"
#include "spectra/probe.hpp"
#include "spectra/rank.hpp"

namespace spectra {

// Cosine grid between the top-k right singular vectors of W^i and the top-k
// left singular vectors of A^{i-1} (absolute values). max_cosine is the grid
// maximum; network_average averages the per-layer maxima.
struct AlignmentLayer {
    std::size_t layer = 0;  // 1-based
    double max_cosine = 0.0;
    Matrix grid;
};

struct AlignmentEpoch {
    std::size_t epoch = 0;
    std::vector<AlignmentLayer> layers;
    double network_average = 0.0;
};

struct AlignmentReport {
    std::size_t k = 0;
    std::vector<AlignmentEpoch> epochs;
};

struct RankCurves {
    std::vector<std::size_t> epochs;
    std::vector<std::size_t> pre;
    std::vector<std::size_t> post;
};

struct GradientRankCell {
    std::size_t layer = 0;  // 1-based
    std::size_t epoch = 0;
    std::size_t grad_rank = 0;
    std::size_t act_rank = 0;
    bool bound_ok = false;
};

// Frobenius norm of the logits matrix at each recorded epoch.
std::vector<double> logits_norm_curve(const TrainTrace& trace);

// Numerical rank of M and of softmax_T(M) (column-wise, at the run's
// training temperature) per recorded epoch.
RankCurves rank_curves(const TrainTrace& trace, const RankPolicy& policy);

AlignmentReport alignment_report(const TrainTrace& trace, std::size_t k);

// grad_rank/act_rank follow the caller's policy; bound_ok compares ranks
// under a shared absolute threshold of 1e-10 times the larger top singular
// value, the exact-rank surrogate that keeps the bound assertable.
std::vector<GradientRankCell> gradient_rank_check(const TrainTrace& trace,
                                                  const RankPolicy& policy);

// kappa: fraction of depth at which probe accuracy first reaches 99% of the
// final layer's accuracy (layers 1-based).
double effective_depth(const std::vector<double>& probe_accs, std::size_t total_layers);

// rho: (best OOD accuracy across layers - final layer's) / best.
double ood_generalization_loss(const std::vector<double>& ood_accs);

std::size_t solutions_rank(const Matrix& logits, const RankPolicy& policy);

// Average absolute cosine between ID class means and the OOD global mean.
double orthodev(const Matrix& penultimate_id, const std::vector<std::size_t>& labels,
                const Matrix& penultimate_ood);

// Probe record with the representation stage: "activation" for hidden
// layers, "logits"/"softmax" for the two final-layer variants.
struct ProbeRecord {
    std::size_t layer = 0;
    Split split = Split::test;
    std::string stage = "activation";
    double accuracy = 0.0;
};

struct MetricsReport {
    double kappa = 0.0;
    double rho = 0.0;
    std::size_t sr = 0;
    double orthodev = 0.0;
    std::vector<std::size_t> curve_epochs;
    std::vector<double> logits_norm;
    std::vector<std::size_t> pre_rank;
    std::vector<std::size_t> post_rank;
    std::vector<double> alignment_avg;
    std::vector<ProbeRecord> probes;
};

// Full per-run aggregation: probes every layer on the test and ood splits,
// kappa/rho/SR/OrthoDev, and the per-epoch curves. Probe streams are derived
// from `seed`, one shared stream per split so layer curves share their
// train/eval partition.
MetricsReport metrics_report(const TrainTrace& trace, const Dataset& id_set,
                             const Dataset& ood_set, const RankPolicy& policy,
                             std::uint64_t seed);

std::string metrics_to_json(const MetricsReport& report);
MetricsReport metrics_from_json(const std::string& text);
void write_curves_csv(const MetricsReport& report, const std::filesystem::path& path);

} // namespace spectra
