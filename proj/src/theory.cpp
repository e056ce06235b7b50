#include "spectra/theory.hpp"

#include <algorithm>
#include <cmath>

#include "spectra/errors.hpp"
#include "spectra/net.hpp"
#include "spectra/rng.hpp"
#include "spectra/svd.hpp"

namespace spectra {

std::vector<double> ScalingExperimentConfig::log_grid(double lo, double hi,
                                                      std::size_t per_decade) {
    if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("log_grid: need 0 < lo < hi");
    if (per_decade < 1) throw ValidationError("log_grid: per_decade must be >= 1");
    const double decades = std::log10(hi / lo);
    const std::size_t steps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(decades * static_cast<double>(per_decade))));
    std::vector<double> grid;
    grid.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        grid.push_back(lo * std::pow(10.0, decades * static_cast<double>(i) /
                                               static_cast<double>(steps)));
    }
    return grid;
}

void ScalingExperimentConfig::validate() const {
    if (n < 2) throw ValidationError("scaling: n must be >= 2");
    if (trials < 1) throw ValidationError("scaling: trials must be >= 1");
    if (k_values.empty()) throw ValidationError("scaling: k_values empty");
    for (std::size_t k : k_values) {
        if (k < 1 || k > n) throw ValidationError("scaling: k out of range");
    }
    if (scales.empty()) throw ValidationError("scaling: scales empty");
    double prev = 0.0;
    for (double s : scales) {
        if (!(s > prev)) throw ValidationError("scaling: scales must be positive increasing");
        prev = s;
    }
}

ScalingResult scaling_experiment(const ScalingExperimentConfig& cfg, const RankPolicy& policy) {
    cfg.validate();
    policy.validate();
    ScalingResult result;
    for (std::size_t k : cfg.k_values) {
        std::vector<double> rank_sum(cfg.scales.size(), 0.0);
        std::vector<double> gap_sum(cfg.scales.size(), 0.0);
        for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
            Rng rng(derive_seed(cfg.seed, rng_stream::trial, k, trial));
            Matrix a(cfg.n, k), b(cfg.n, k);
            for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
            for (double& v : b.data) v = rng.uniform(-1.0, 1.0);
            const Matrix m = multiply(a, transpose(b));
            for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
                const Matrix scaled = scale(m, cfg.scales[si]);
                if (numerical_rank(scaled, policy) != k) ++result.pre_rank_violations;
                const Matrix soft = softmax_with_temperature(scaled, 1.0);
                const std::vector<double> s = svd(soft).s;
                rank_sum[si] += static_cast<double>(
                    rank_from_singular_values(s, cfg.n, cfg.n, policy));
                gap_sum[si] += s.front() - s.back();
            }
        }
        for (std::size_t si = 0; si < cfg.scales.size(); ++si) {
            result.cells.push_back({k, cfg.scales[si],
                                    rank_sum[si] / static_cast<double>(cfg.trials),
                                    gap_sum[si] / static_cast<double>(cfg.trials)});
        }
    }
    return result;
}

BoundReportEntry gap_bound_check(const Matrix& s) {
    require_nonempty(s, "gap_bound_check");
    require_finite(s, "gap_bound_check");
    if (s.rows != s.cols) throw ValidationError("gap_bound_check: matrix must be square");
    const std::size_t n = s.rows;
    for (double v : s.data) {
        if (v < 0.0) throw ValidationError("gap_bound_check: negative entry");
    }
    for (std::size_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += s(i, j);
        if (std::fabs(sum - 1.0) > 1e-12) {
            throw ValidationError("gap_bound_check: column " + std::to_string(j) +
                                  " sums to " + std::to_string(sum));
        }
    }
    const Matrix g = column_gram(s);
    const double inv_n = 1.0 / static_cast<double>(n);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (g(i, i) < inv_n - 1e-9 || g(i, i) > 1.0 + 1e-9) {
            throw ValidationError("gap_bound_check: Gram diagonal outside [1/n, 1]");
        }
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row += g(i, j);
        }
        r = std::max(r, row);
    }
    const std::vector<double> sv = svd(s).s;
    BoundReportEntry entry;
    entry.n = n;
    entry.r = r;
    entry.gap = sv.front() - sv.back();
    entry.bound = std::sqrt(1.0 + r) - std::sqrt(std::max(inv_n - r, 0.0));
    entry.slack = entry.bound - entry.gap;
    return entry;
}

Matrix row_softmax(const Matrix& m) {
    require_nonempty(m, "row_softmax");
    require_finite(m, "row_softmax");
    Matrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row_ptr(i);
        double* dst = out.row_ptr(i);
        double mx = src[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            dst[j] = std::exp(src[j] - mx);
            sum += dst[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] /= sum;
    }
    return out;
}

Rank2SearchResult rank2_full_rank_search(std::size_t n, std::uint64_t seed, double c_max,
                                         const RankPolicy& policy) {
    if (n < 2) throw ValidationError("rank2_full_rank_search: n must be >= 2");
    if (!(c_max >= 1.0)) throw ValidationError("rank2_full_rank_search: c_max must be >= 1");
    policy.validate();

    Rng rng(derive_seed(seed, rng_stream::trial, n));
    Matrix rows(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                rows(i, j) = rng.normal();
                norm2 += rows(i, j) * rows(i, j);
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        rows(i, 0) *= inv;
        rows(i, 1) *= inv;
    }
    const Matrix b = multiply(rows, transpose(rows));
    if (numerical_rank(b, policy) != 2) {
        throw DegenerateDrawError("rank2_full_rank_search: draw produced rank != 2 "
                                  "(retry with a different seed)");
    }

    Rank2SearchResult result;
    for (double c = 1.0; c <= c_max; c *= 2.0) {
        const Matrix soft = row_softmax(scale(b, c));
        const std::size_t rank = numerical_rank(soft, policy);
        if (rank == n) {
            result.c_found = c;
            result.rank_at_c = rank;
            const Matrix limit = row_softmax(scale(b, 64.0 * c));
            result.deviation_at_64c = max_abs_diff(limit, Matrix::identity(n));
            return result;
        }
    }
    return result;
}

NcConstruction nc_rank_construction(std::size_t class_count, std::size_t per_class,
                                    double alpha) {
    if (class_count < 2) throw ValidationError("nc_rank_construction: need >= 2 classes");
    if (per_class < 1) throw ValidationError("nc_rank_construction: per_class must be >= 1");
    const std::size_t c = class_count;
    const double cf = static_cast<double>(c);

    // K = sqrt(C/(C-1)) (I - 11^T/C): rows are the C simplex-ETF class means.
    const double scale_etf = std::sqrt(cf / (cf - 1.0));
    Matrix k_means(c, c);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            k_means(i, j) = scale_etf * ((i == j ? 1.0 : 0.0) - 1.0 / cf);
        }
    }
    const Matrix gram = multiply(k_means, transpose(k_means));
    // target Gram C/(C-1) I - 1/(C-1) 11^T has unit diagonal and -1/(C-1)
    // off-diagonals
    double err2 = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double want = i == j ? 1.0 : -1.0 / (cf - 1.0);
            const double d = gram(i, j) - want;
            err2 += d * d;
        }
    }

    Matrix selection(c, c * per_class);
    for (std::size_t cls = 0; cls < c; ++cls) {
        for (std::size_t s = 0; s < per_class; ++s) {
            selection(cls, cls * per_class + s) = 1.0;
        }
    }
    NcConstruction out;
    out.logits = scale(multiply(gram, selection), alpha);
    out.rank = numerical_rank(out.logits, RankPolicy::relative());
    out.gram_error = std::sqrt(err2);
    return out;
}

std::vector<BifurcationPoint> bifurcation_sweep(std::size_t n,
                                                const std::vector<double>& temperatures,
                                                std::uint64_t seed) {
    if (n < 2) throw ValidationError("bifurcation_sweep: n must be >= 2");
    for (double t : temperatures) {
        if (!(t > 0.0)) throw ValidationError("bifurcation_sweep: temperatures must be > 0");
    }
    Rng rng(derive_seed(seed, rng_stream::trial, 0xB1F));
    Matrix u(n, 1), v(1, n);
    for (double& x : u.data) x = rng.normal();
    for (double& x : v.data) x = rng.normal();
    const Matrix m = multiply(u, v);

    // pre-softmax argmax row per column (ties -> lowest index)
    std::vector<std::size_t> argmax(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        double best = m(0, j);
        for (std::size_t i = 1; i < n; ++i) {
            if (m(i, j) > best) {
                best = m(i, j);
                argmax[j] = i;
            }
        }
    }

    std::vector<BifurcationPoint> sweep;
    sweep.reserve(temperatures.size());
    for (double t : temperatures) {
        const Matrix s = softmax_with_temperature(m, t);
        BifurcationPoint pt;
        pt.temperature = t;
        double same = 0.0, cross = 0.0;
        for (std::size_t j1 = 0; j1 + 1 < n; ++j1) {
            for (std::size_t j2 = j1 + 1; j2 < n; ++j2) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += s(i, j1) * s(i, j2);
                if (argmax[j1] == argmax[j2]) {
                    same += dot;
                    ++pt.same_count;
                } else {
                    cross += dot;
                    ++pt.cross_count;
                }
            }
        }
        pt.same_mean = pt.same_count ? same / static_cast<double>(pt.same_count) : 0.0;
        pt.cross_mean = pt.cross_count ? cross / static_cast<double>(pt.cross_count) : 0.0;
        const std::vector<double> sv = svd(s).s;
        pt.gap = sv.front() - sv.back();
        pt.rank = rank_from_singular_values(sv, n, n, RankPolicy::relative());
        sweep.push_back(pt);
    }
    return sweep;
}

} // namespace spectra
