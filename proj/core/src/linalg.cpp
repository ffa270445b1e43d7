#include "qrfx/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "qrfx/error.hpp"

namespace qrfx {
namespace {

// Lower-triangular factor L with A = L L^T, stored dense.
Matrix cholesky(const Matrix& a) {
  if (a.rows != a.cols) throw ValidationError("cholesky: matrix not square");
  const std::size_t n = a.rows;
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw ValidationError("cholesky: matrix not SPD");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

}  // namespace

std::vector<double> cholesky_solve(const Matrix& a, const std::vector<double>& b) {
  const std::size_t n = a.rows;
  if (b.size() != n) throw ValidationError("cholesky_solve: size mismatch");
  Matrix l = cholesky(a);
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

double cholesky_logdet(const Matrix& a) {
  Matrix l = cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

EigenSym eigen_sym(const Matrix& a) {
  if (a.rows != a.cols) throw ValidationError("eigen_sym: matrix not square");
  const std::size_t n = a.rows;
  Matrix m = a;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-22) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSym out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = m(i, i);
  // Sort ascending, permuting eigenvector columns along.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return out.values[x] < out.values[y]; });
  EigenSym sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    sorted.values[c] = out.values[order[c]];
    for (std::size_t r = 0; r < n; ++r) sorted.vectors(r, c) = v(r, order[c]);
  }
  return sorted;
}

}  // namespace qrfx
