#include "spectra/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spectra/errors.hpp"
#include "spectra/parallel.hpp"

namespace spectra {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
    Matrix m(rws.size(), rws.size() ? rws.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& r : rws) {
        if (r.size() != m.cols) throw DimensionError("from_rows: ragged row lengths");
        std::size_t j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

void require_finite(const Matrix& m, const std::string& what) {
    for (double v : m.data) {
        if (!std::isfinite(v)) {
            throw ValidationError(what + ": non-finite entry");
        }
    }
}

void require_nonempty(const Matrix& m, const std::string& what) {
    if (m.empty()) throw DimensionError(what + ": empty matrix");
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionError("multiply: inner dimensions " + std::to_string(a.cols) +
                             " vs " + std::to_string(b.rows));
    }
    Matrix c(a.rows, b.cols);
    // Row-parallel ikj product: each output row is written by exactly one
    // worker with a fixed summation order, so results do not depend on the
    // thread count.
    const std::size_t grain =
        std::max<std::size_t>(1, 600000 / (2 * a.cols * b.cols + 1));
    parallel_for(a.rows, grain, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t i = r0; i < r1; ++i) {
            double* ci = c.row_ptr(i);
            const double* ai = a.row_ptr(i);
            for (std::size_t l = 0; l < a.cols; ++l) {
                const double av = ai[l];
                if (av == 0.0) continue;
                const double* bl = b.row_ptr(l);
                for (std::size_t j = 0; j < b.cols; ++j) {
                    ci[j] += av * bl[j];
                }
            }
        }
    });
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            t(j, i) = m(i, j);
        }
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("subtract: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix scale(const Matrix& m, double factor) {
    Matrix c = m;
    for (double& v : c.data) v *= factor;
    return c;
}

double frobenius_norm(const Matrix& m) {
    require_nonempty(m, "frobenius_norm");
    double sum = 0.0;
    for (double v : m.data) sum += v * v;
    return std::sqrt(sum);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw DimensionError("max_abs_diff: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = std::fabs(a.data[i] - b.data[i]);
        if (d > worst) worst = d;
    }
    return worst;
}

Matrix gather_columns(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix g(m.rows, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= m.cols) throw DimensionError("gather_columns: index out of range");
        for (std::size_t i = 0; i < m.rows; ++i) g(i, j) = m(i, idx[j]);
    }
    return g;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix g(idx.size(), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= m.rows) throw DimensionError("gather_rows: index out of range");
        for (std::size_t j = 0; j < m.cols; ++j) g(i, j) = m(idx[i], j);
    }
    return g;
}

} // namespace spectra
