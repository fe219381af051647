#pragma once

// Dense row-major double matrix plus the handful of product kernels the
// training loop needs. The kernels are written in saxpy form (contiguous
// fused multiply-add over output rows) so the compiler can vectorize them
// without reordering any floating-point reduction: results are bit-identical
// from run to run and independent of vector width.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vprd {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  std::span<const double> row_span(std::size_t r) const {
    return {row(r), cols};
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_shape(const Matrix& m, std::size_t r, std::size_t c,
                          const char* what) {
  if (m.rows != r || m.cols != c) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(r) + "x" + std::to_string(c) +
                                ", got " + std::to_string(m.rows) + "x" +
                                std::to_string(m.cols));
  }
}

/// C (n x m) += A (n x k) * B (k x m). Four A-rows per pass so each B row is
/// reused from cache.
inline void gemm_nn_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols)
    throw std::invalid_argument("gemm_nn_acc: shape mismatch");
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* c0 = c.row(i);
    double* c1 = c.row(i + 1);
    double* c2 = c.row(i + 2);
    double* c3 = c.row(i + 3);
    const double* a0 = a.row(i);
    const double* a1 = a.row(i + 1);
    const double* a2 = a.row(i + 2);
    const double* a3 = a.row(i + 3);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b.row(p);
      const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      for (std::size_t j = 0; j < m; ++j) {
        const double bj = bp[j];
        c0[j] += s0 * bj;
        c1[j] += s1 * bj;
        c2[j] += s2 * bj;
        c3[j] += s3 * bj;
      }
    }
  }
  for (; i < n; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      const double* bp = b.row(p);
      for (std::size_t j = 0; j < m; ++j) ci[j] += s * bp[j];
    }
  }
}

/// C (k x m) += A (n x k)^T * B (n x m). Same blocking idea over n.
inline void gemm_tn_acc(Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols)
    throw std::invalid_argument("gemm_tn_acc: shape mismatch");
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* a0 = a.row(i);
    const double* a1 = a.row(i + 1);
    const double* a2 = a.row(i + 2);
    const double* a3 = a.row(i + 3);
    const double* b0 = b.row(i);
    const double* b1 = b.row(i + 1);
    const double* b2 = b.row(i + 2);
    const double* b3 = b.row(i + 3);
    for (std::size_t p = 0; p < k; ++p) {
      double* cp = c.row(p);
      const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      for (std::size_t j = 0; j < m; ++j)
        cp[j] += s0 * b0[j] + s1 * b1[j] + s2 * b2[j] + s3 * b3[j];
    }
  }
  for (; i < n; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      double* cp = c.row(p);
      for (std::size_t j = 0; j < m; ++j) cp[j] += s * bi[j];
    }
  }
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) t(c, r) = a(r, c);
  return t;
}

inline void transpose_into(Matrix& t, const Matrix& a) {
  require_shape(t, a.cols, a.rows, "transpose_into");
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) t(c, r) = a(r, c);
}

/// Adds a row vector to every row of m.
inline void add_row_broadcast(Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols) throw std::invalid_argument("add_row_broadcast: width mismatch");
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* p = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) p[c] += v[c];
  }
}

/// Column sums into out (size cols).
inline void column_sums(const Matrix& m, std::span<double> out) {
  if (out.size() != m.cols) throw std::invalid_argument("column_sums: width mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* p = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += p[c];
  }
}

}  // namespace vprd
