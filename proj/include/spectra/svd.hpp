#pragma once
#include <utility>
#include <vector>

#include "spectra/matrix.hpp"

namespace spectra {

// Thin SVD of an m x n matrix: u is m x k, s has k entries (descending,
// non-negative), vt is k x n with orthonormal rows, k = min(m, n).
//
// untrusted_below is 0 for the direct Jacobi path. When the factorization
// went through the Gram-matrix reduction (aspect ratio beyond 8:1), singular
// values below this floor (sqrt(machine eps) * s[0]) lost relative precision
// in the squaring and should be treated as magnitude estimates only.
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix vt;
    double untrusted_below = 0.0;
};

SvdResult svd(const Matrix& m);

// First k left and right singular vectors, each returned as columns.
std::pair<Matrix, Matrix> top_k_subspaces(const Matrix& m, std::size_t k);

// S^T S of the input.
Matrix column_gram(const Matrix& m);

// Eigendecomposition of a symmetric matrix via cyclic two-sided Jacobi.
// Eigenvalues descending; eigenvectors as columns of `vectors`.
struct SymmetricEigenResult {
    std::vector<double> values;
    Matrix vectors;
};

SymmetricEigenResult symmetric_eigen(const Matrix& sym);

} // namespace spectra
