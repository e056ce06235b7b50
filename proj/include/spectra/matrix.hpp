#pragma once
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace spectra {

// Dense real matrix, row-major. The universal carrier for weights,
// activations, logits and gradients throughout the toolkit.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t size() const { return rows * cols; }
};

// Throws ValidationError if any entry is NaN/Inf; `what` names the operand.
void require_finite(const Matrix& m, const std::string& what);
// Throws DimensionError if the matrix is empty; `what` names the operand.
void require_nonempty(const Matrix& m, const std::string& what);

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double factor);

double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Columns `idx` of `m` gathered in order into a rows x idx.size() matrix.
Matrix gather_columns(const Matrix& m, const std::vector<std::size_t>& idx);
// Rows `idx` of `m` gathered in order.
Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& idx);

} // namespace spectra
