#include "spectra/rank.hpp"

#include <algorithm>
#include <limits>

#include "spectra/errors.hpp"

namespace spectra {

void RankPolicy::validate() const {
    if (!(threshold > 0.0)) {
        throw ValidationError("RankPolicy: threshold must be > 0");
    }
}

double RankPolicy::effective_threshold(double sigma_max, std::size_t rows,
                                       std::size_t cols) const {
    if (mode == Mode::absolute) return threshold;
    return threshold * sigma_max * static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon();
}

std::size_t numerical_rank(const Matrix& m, const RankPolicy& policy) {
    policy.validate();
    const SvdResult r = svd(m);
    return rank_from_singular_values(r.s, m.rows, m.cols, policy);
}

std::size_t rank_from_singular_values(const std::vector<double>& s, std::size_t rows,
                                      std::size_t cols, const RankPolicy& policy) {
    policy.validate();
    if (s.empty()) return 0;
    const double tau = policy.effective_threshold(s.front(), rows, cols);
    std::size_t count = 0;
    for (double v : s) {
        if (v > tau) ++count;
    }
    return count;
}

} // namespace spectra
