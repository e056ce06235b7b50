#pragma once
#include <cstddef>
#include <vector>

#include "spectra/matrix.hpp"
#include "spectra/svd.hpp"

namespace spectra {

// Numerical-rank thresholding. Relative mode mirrors the framework default:
// effective threshold = gamma * s1 * max(rows, cols) * machine epsilon.
// Absolute mode compares singular values against gamma directly.
struct RankPolicy {
    enum class Mode { relative, absolute };
    Mode mode = Mode::relative;
    double threshold = 1.0;

    static RankPolicy relative(double gamma = 1.0) { return {Mode::relative, gamma}; }
    static RankPolicy absolute(double gamma) { return {Mode::absolute, gamma}; }

    void validate() const;
    double effective_threshold(double sigma_max, std::size_t rows, std::size_t cols) const;
};

std::size_t numerical_rank(const Matrix& m, const RankPolicy& policy);

// Rank from precomputed singular values (descending); avoids refactorizing
// when the caller already has an SVD in hand.
std::size_t rank_from_singular_values(const std::vector<double>& s, std::size_t rows,
                                      std::size_t cols, const RankPolicy& policy);

} // namespace spectra
