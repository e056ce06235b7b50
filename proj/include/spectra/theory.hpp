#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "spectra/matrix.hpp"
#include "spectra/rank.hpp"

namespace spectra {

// Scaling sweep of Fig.-5 form: M = A B^T with A, B ~ U(-1,1)^{n x k},
// post-softmax rank measured column-wise at T=1 across a scale grid.
struct ScalingExperimentConfig {
    std::size_t n = 50;
    std::vector<std::size_t> k_values = {1, 2, 3, 4, 5};
    std::vector<double> scales;
    std::size_t trials = 20;
    std::uint64_t seed = 0;

    // log-spaced grid, `per_decade` points per decade of [lo, hi]
    static std::vector<double> log_grid(double lo, double hi, std::size_t per_decade = 40);
    void validate() const;
};

struct ScalingCell {
    std::size_t k = 0;
    double scale = 0.0;
    double mean_post_rank = 0.0;
    double mean_gap = 0.0;  // mean sigma_1 - sigma_n of the softmaxed matrix
};

struct ScalingResult {
    std::vector<ScalingCell> cells;
    std::size_t pre_rank_violations = 0;  // numerical_rank(c*M) != k occurrences
};

ScalingResult scaling_experiment(const ScalingExperimentConfig& cfg, const RankPolicy& policy);

// Proposition-B2 bound check for one column-stochastic matrix.
struct BoundReportEntry {
    std::size_t n = 0;
    double r = 0.0;      // max row sum of off-diagonal Gram entries
    double gap = 0.0;    // sigma_1 - sigma_n
    double bound = 0.0;  // sqrt(1+r) - sqrt(max(1/n - r, 0))
    double slack = 0.0;  // bound - gap
};

BoundReportEntry gap_bound_check(const Matrix& s);

// Appendix-I search: B = row-normalized Gaussian outer Gram (rank 2); doubles
// c from 1 until row-wise softmax(cB) reaches numerical rank n under the
// given policy. deviation_at_64c reports max |softmax(64 c B) - I| when found.
struct Rank2SearchResult {
    std::optional<double> c_found;
    std::size_t rank_at_c = 0;
    double deviation_at_64c = 0.0;
};

Rank2SearchResult rank2_full_rank_search(std::size_t n, std::uint64_t seed, double c_max,
                                         const RankPolicy& policy);

// Simplex-ETF class-mean construction with the Gram identity
// K K^T = C/(C-1) I - 1/(C-1) 11^T; logits M = alpha (K K^T) S for a
// balanced binary selection S.
struct NcConstruction {
    Matrix logits;
    std::size_t rank = 0;
    double gram_error = 0.0;  // Frobenius distance to the target Gram
};

NcConstruction nc_rank_construction(std::size_t class_count, std::size_t per_class,
                                    double alpha = 1.0);

// Fig.-14 sweep: column-wise softmax of a random rank-1 matrix across
// temperatures; column pairs grouped by whether their pre-softmax argmax
// rows coincide.
struct BifurcationPoint {
    double temperature = 0.0;
    double same_mean = 0.0;   // mean inner product, same-argmax pairs
    double cross_mean = 0.0;  // mean inner product, cross-argmax pairs
    std::size_t same_count = 0;
    std::size_t cross_count = 0;
    double gap = 0.0;  // sigma_1 - sigma_n
    std::size_t rank = 0;
};

std::vector<BifurcationPoint> bifurcation_sweep(std::size_t n,
                                                const std::vector<double>& temperatures,
                                                std::uint64_t seed);

// Row-wise softmax at T=1 (the Appendix-I orientation).
Matrix row_softmax(const Matrix& m);

} // namespace spectra
