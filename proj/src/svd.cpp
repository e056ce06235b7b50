#include "spectra/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spectra/errors.hpp"

namespace spectra {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kOffMassTol = 1e-14;   // relative to ||m||_F^2
constexpr double kPairSkipTol = 1e-16;  // |<p,q>| <= tol*|p||q| needs no rotation

// Round-robin tournament schedule: kPadded-1 rounds of disjoint pairs.
// Disjointness lets rounds run column-parallel with bit-identical results.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> make_rounds(std::size_t k) {
    const std::size_t padded = k + (k % 2);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
    if (padded < 2) return rounds;
    rounds.resize(padded - 1);
    for (std::size_t r = 0; r + 1 < padded; ++r) {
        for (std::size_t i = 0; i < padded / 2; ++i) {
            std::size_t a = (i == 0) ? padded - 1 : (r + i) % (padded - 1);
            std::size_t b = (r + padded - 1 - i) % (padded - 1);
            if (a >= k || b >= k) continue;  // dummy slot when k is odd
            if (a > b) std::swap(a, b);
            rounds[r].push_back({a, b});
        }
    }
    return rounds;
}

// One-sided Jacobi on k columns of length m, stored contiguously (column j at
// cols[j*m]). vt (k x k) accumulates the right rotations; pass identity for a
// fresh factorization or an initial basis when polishing. fro2 = squared
// Frobenius norm of the original matrix, fixed by rotation invariance.
void one_sided_jacobi(std::vector<double>& cols, std::size_t m, std::size_t k,
                      Matrix& vt, double fro2) {
    if (k < 2 || fro2 == 0.0) return;
    const auto rounds = make_rounds(k);
    std::vector<double> gammas;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off2 = 0.0;
        for (const auto& round : rounds) {
            gammas.assign(round.size(), 0.0);
            // Pairs within a round touch disjoint columns; kept serial because
            // rotation work per round is too small to amortize thread spawns.
            auto do_pairs = [&](std::size_t i0, std::size_t i1) {
                for (std::size_t t = i0; t < i1; ++t) {
                    const auto [p, q] = round[t];
                    double* cp = cols.data() + p * m;
                    double* cq = cols.data() + q * m;
                    double alpha = 0.0, beta = 0.0, gamma = 0.0;
                    for (std::size_t i = 0; i < m; ++i) {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    gammas[t] = gamma;
                    if (std::fabs(gamma) <= kPairSkipTol * std::sqrt(alpha) * std::sqrt(beta)) {
                        continue;
                    }
                    const double tau = (beta - alpha) / (2.0 * gamma);
                    const double t_rot = (tau >= 0.0 ? 1.0 : -1.0) /
                                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                    const double c = 1.0 / std::sqrt(1.0 + t_rot * t_rot);
                    const double s = t_rot * c;
                    for (std::size_t i = 0; i < m; ++i) {
                        const double vp = cp[i];
                        const double vq = cq[i];
                        cp[i] = c * vp - s * vq;
                        cq[i] = s * vp + c * vq;
                    }
                    double* rp = vt.row_ptr(p);
                    double* rq = vt.row_ptr(q);
                    for (std::size_t j = 0; j < k; ++j) {
                        const double vp = rp[j];
                        const double vq = rq[j];
                        rp[j] = c * vp - s * vq;
                        rq[j] = s * vp + c * vq;
                    }
                }
            };
            do_pairs(0, round.size());
            for (double g : gammas) off2 += g * g;
        }
        if (std::sqrt(2.0 * off2) <= kOffMassTol * fro2) return;
    }
    throw ConvergenceError("one-sided Jacobi: no convergence in " +
                           std::to_string(kMaxSweeps) + " sweeps");
}

struct Factor {
    std::vector<double> cols;  // k columns of length m
    std::size_t m = 0, k = 0;
    Matrix vt;                 // k x k
    double untrusted_below = 0.0;
};

// Assemble a sorted, sign-fixed thin SVD from converged columns.
SvdResult finalize(Factor f) {
    const std::size_t m = f.m, k = f.k;
    std::vector<double> sigma(k);
    for (std::size_t j = 0; j < k; ++j) {
        double sum = 0.0;
        const double* cj = f.cols.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) sum += cj[i] * cj[i];
        sigma[j] = std::sqrt(sum);
    }
    // Order by value descending, original index breaking ties.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sigma[a] > sigma[b];
    });

    SvdResult out;
    out.s.resize(k);
    out.u = Matrix(m, k);
    out.vt = Matrix(k, f.vt.cols);
    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    // Below this scale a column direction is numerical noise; rebuild it by
    // orthonormal completion so U keeps orthonormal columns.
    const double null_tol =
        sigma_max * static_cast<double>(std::max(m, k)) * std::numeric_limits<double>::epsilon();

    std::vector<std::size_t> needs_completion;
    for (std::size_t jj = 0; jj < k; ++jj) {
        const std::size_t src = order[jj];
        out.s[jj] = sigma[src];
        for (std::size_t c = 0; c < f.vt.cols; ++c) out.vt(jj, c) = f.vt(src, c);
        if (sigma[src] > null_tol && sigma[src] > 0.0) {
            const double inv = 1.0 / sigma[src];
            const double* cj = f.cols.data() + src * m;
            for (std::size_t i = 0; i < m; ++i) out.u(i, jj) = cj[i] * inv;
        } else {
            needs_completion.push_back(jj);
        }
    }
    // Deterministic Gram-Schmidt completion against the kept columns. The
    // best standard-basis candidate is the row carrying the least mass in
    // the columns placed so far; its residual against their span has norm
    // sqrt(1 - mass), which stays well away from zero while completion is
    // still needed.
    if (!needs_completion.empty()) {
        std::vector<bool> done(k, true);
        std::vector<double> row_mass(m, 0.0);
        for (std::size_t jj : needs_completion) done[jj] = false;
        for (std::size_t c = 0; c < k; ++c) {
            if (!done[c]) continue;
            for (std::size_t i = 0; i < m; ++i) row_mass[i] += out.u(i, c) * out.u(i, c);
        }
        std::vector<double> v(m, 0.0);
        for (std::size_t jj : needs_completion) {
            std::size_t cand = 0;
            for (std::size_t i = 1; i < m; ++i) {
                if (row_mass[i] < row_mass[cand]) cand = i;
            }
            std::fill(v.begin(), v.end(), 0.0);
            v[cand] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t c = 0; c < k; ++c) {
                    if (!done[c]) continue;
                    double dot = 0.0;
                    for (std::size_t i = 0; i < m; ++i) dot += v[i] * out.u(i, c);
                    for (std::size_t i = 0; i < m; ++i) v[i] -= dot * out.u(i, c);
                }
            }
            double norm2 = 0.0;
            for (double x : v) norm2 += x * x;
            if (!(norm2 > 1e-12)) {
                throw ConvergenceError("svd: failed to complete null-space basis");
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t i = 0; i < m; ++i) {
                out.u(i, jj) = v[i] * inv;
                row_mass[i] += out.u(i, jj) * out.u(i, jj);
            }
            done[jj] = true;
        }
    }
    // Sign convention: largest-magnitude entry of each left vector positive.
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double a = std::fabs(out.u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (out.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t c = 0; c < out.vt.cols; ++c) out.vt(j, c) = -out.vt(j, c);
        }
    }
    out.untrusted_below = f.untrusted_below;
    return out;
}

// Columns of `a` copied into contiguous column storage.
std::vector<double> to_columns(const Matrix& a) {
    std::vector<double> cols(a.rows * a.cols);
    for (std::size_t j = 0; j < a.cols; ++j) {
        double* cj = cols.data() + j * a.rows;
        for (std::size_t i = 0; i < a.rows; ++i) cj[i] = a(i, j);
    }
    return cols;
}

// SVD of a tall matrix (rows >= cols). Direct Jacobi up to 8:1 aspect;
// beyond that, Gram-matrix reduction followed by Jacobi polish of A*V. The
// polish restores the singular values to working precision from the original
// columns, but the squaring still blurs directions below sqrt(eps)*s1, hence
// the untrusted floor on that path.
SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows, k = a.cols;
    const double fro = frobenius_norm(a);
    Factor f;
    f.m = m;
    f.k = k;
    if (m <= 8 * k) {
        f.cols = to_columns(a);
        f.vt = Matrix::identity(k);
        one_sided_jacobi(f.cols, m, k, f.vt, fro * fro);
        return finalize(std::move(f));
    }
    const Matrix gram = multiply(transpose(a), a);
    const SymmetricEigenResult eig = symmetric_eigen(gram);
    const Matrix b = multiply(a, eig.vectors);
    f.cols = to_columns(b);
    f.vt = transpose(eig.vectors);
    one_sided_jacobi(f.cols, m, k, f.vt, fro * fro);
    SvdResult out = finalize(std::move(f));
    out.untrusted_below =
        (out.s.empty() ? 0.0 : out.s[0]) * std::sqrt(std::numeric_limits<double>::epsilon());
    return out;
}

} // namespace

SvdResult svd(const Matrix& m) {
    require_nonempty(m, "svd");
    require_finite(m, "svd");
    if (m.rows >= m.cols) return svd_tall(m);
    // A = U S V^T  <=>  A^T = V S U^T
    SvdResult t = svd_tall(transpose(m));
    SvdResult out;
    out.s = std::move(t.s);
    out.u = transpose(t.vt);
    out.vt = transpose(t.u);
    out.untrusted_below = t.untrusted_below;
    // Re-apply the sign convention in the new orientation.
    const std::size_t k = out.s.size();
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < out.u.rows; ++i) {
            const double a = std::fabs(out.u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (out.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < out.u.rows; ++i) out.u(i, j) = -out.u(i, j);
            for (std::size_t c = 0; c < out.vt.cols; ++c) out.vt(j, c) = -out.vt(j, c);
        }
    }
    return out;
}

std::pair<Matrix, Matrix> top_k_subspaces(const Matrix& m, std::size_t k) {
    require_nonempty(m, "top_k_subspaces");
    if (k == 0 || k > std::min(m.rows, m.cols)) {
        throw DimensionError("top_k_subspaces: k=" + std::to_string(k) + " out of range for " +
                             std::to_string(m.rows) + "x" + std::to_string(m.cols));
    }
    const SvdResult r = svd(m);
    Matrix left(m.rows, k), right(m.cols, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < m.rows; ++i) left(i, j) = r.u(i, j);
        for (std::size_t i = 0; i < m.cols; ++i) right(i, j) = r.vt(j, i);
    }
    return {left, right};
}

Matrix column_gram(const Matrix& m) {
    require_nonempty(m, "column_gram");
    require_finite(m, "column_gram");
    return multiply(transpose(m), m);
}

SymmetricEigenResult symmetric_eigen(const Matrix& sym) {
    require_nonempty(sym, "symmetric_eigen");
    if (sym.rows != sym.cols) throw DimensionError("symmetric_eigen: matrix not square");
    const std::size_t n = sym.rows;
    Matrix a = sym;
    Matrix v = Matrix::identity(n);
    const double fro = frobenius_norm(sym);
    const int max_sweeps = 100;
    bool converged = fro == 0.0;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                off2 += apq * apq;
                if (std::fabs(apq) <= 1e-18 * fro) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double apj = a(p, j);
                    const double aqj = a(q, j);
                    a(p, j) = c * apj - s * aqj;
                    a(q, j) = s * apj + c * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
        if (std::sqrt(2.0 * off2) <= 1e-15 * fro) converged = true;
    }
    if (!converged) {
        throw ConvergenceError("symmetric_eigen: no convergence in 100 sweeps");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    SymmetricEigenResult out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

} // namespace spectra
