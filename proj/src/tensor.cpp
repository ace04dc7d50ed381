#include "zsl/tensor.hpp"

#include <cmath>
#include <string>

namespace zsl {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw ValidationError("Matrix: negative dimension");
  data.assign(static_cast<std::size_t>(r) * c, 0.0);
}

Matrix::Matrix(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (r < 0 || c < 0) throw ValidationError("Matrix: negative dimension");
  if (data.size() != static_cast<std::size_t>(r) * c) {
    throw ValidationError("Matrix: data length " + std::to_string(data.size()) +
                          " does not match shape " + std::to_string(r) + "x" +
                          std::to_string(c));
  }
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

Matrix identity(int n) { return rect_identity(n, n); }

Matrix rect_identity(int rows, int cols) {
  Matrix m(rows, cols);
  int d = rows < cols ? rows : cols;
  for (int i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ValidationError("matmul: dimension mismatch: " + shape_str(a) +
                          " times " + shape_str(b));
  }
  Matrix c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data) {
    if (v < 0.0) v = 0.0;
  }
  return out;
}

Matrix softmax_row(const Matrix& v) {
  if (v.rows != 1 || v.cols < 1) {
    throw ValidationError("softmax_row: expected 1xN with N >= 1, got " +
                          shape_str(v));
  }
  double mx = v.data[0];
  for (double x : v.data) {
    if (x > mx) mx = x;
  }
  Matrix out(1, v.cols);
  double sum = 0.0;
  for (int j = 0; j < v.cols; ++j) {
    out.data[j] = std::exp(v.data[j] - mx);
    sum += out.data[j];
  }
  for (int j = 0; j < v.cols; ++j) out.data[j] /= sum;
  return out;
}

double sqdist(const Matrix& a, const Matrix& b) {
  if (a.rows != 1 || b.rows != 1 || a.cols != b.cols) {
    throw ValidationError("sqdist: length mismatch: " + shape_str(a) + " vs " +
                          shape_str(b));
  }
  double acc = 0.0;
  for (int j = 0; j < a.cols; ++j) {
    double d = a.data[j] - b.data[j];
    acc += d * d;
  }
  return acc;
}

Matrix row(const Matrix& m, int i) {
  if (i < 0 || i >= m.rows) {
    throw ValidationError("row: index " + std::to_string(i) +
                          " out of range for " + shape_str(m));
  }
  Matrix r(1, m.cols);
  for (int j = 0; j < m.cols; ++j) r.data[j] = m(i, j);
  return r;
}

double frobenius_sq(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data) acc += v * v;
  return acc;
}

double Rng::normal() {
  double u1 = unit();
  double u2 = unit();
  // 1-u1 lies in (0,1], keeping the log argument positive.
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * 3.141592653589793 * u2);
}

std::uint64_t Rng::bounded(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::bounded: n must be positive");
  return next() % n;
}

double rng_uniform(Rng& rng, double lo, double hi) {
  if (!(lo < hi)) {
    throw ValidationError("rng_uniform: require lo < hi, got lo=" +
                          std::to_string(lo) + " hi=" + std::to_string(hi));
  }
  return lo + rng.unit() * (hi - lo);
}

}  // namespace zsl
