#pragma once

#include <cstddef>
#include <vector>

namespace qrfx {

// Dense row-major matrix, just enough linear algebra for the small SPD
// solves in the Bayesian ridge regressor (p <= 45 here).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Solves A x = b for symmetric positive definite A via Cholesky.
// Throws ValidationError if A is not (numerically) SPD.
std::vector<double> cholesky_solve(const Matrix& a, const std::vector<double>& b);

// log det(A) for SPD A, via the same factorization.
double cholesky_logdet(const Matrix& a);

// Jacobi eigendecomposition of a symmetric matrix: A = V diag(w) V^T,
// eigenvalues ascending. Plenty for the p <= 45 matrices here.
struct EigenSym {
  std::vector<double> values;
  Matrix vectors;  // columns are eigenvectors
};
EigenSym eigen_sym(const Matrix& a);

}  // namespace qrfx
