#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "zsl/error.hpp"

namespace zsl {

// Dense row-major matrix of doubles. The single numeric carrier for
// features, attributes, weights and gradients. Row vectors are 1xN.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // length rows*cols

  Matrix() = default;
  Matrix(int r, int c);  // zero-filled
  Matrix(int r, int c, std::vector<double> values);

  double& operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  double operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols + j];
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
  bool all_finite() const;
};

bool operator==(const Matrix& a, const Matrix& b);

Matrix identity(int n);
// Ones on the main diagonal, zeros elsewhere; equals identity(n) when square.
Matrix rect_identity(int rows, int cols);
Matrix transpose(const Matrix& m);

// c[i][j] = sum_k a[i][k] * b[k][j], k ascending. Sequential loop order is
// part of the determinism contract.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix relu(const Matrix& m);

// Row softmax with max-subtraction; input and output are 1xN, N >= 1.
Matrix softmax_row(const Matrix& v);

// Squared Euclidean distance between two row vectors of equal length.
double sqdist(const Matrix& a, const Matrix& b);

Matrix row(const Matrix& m, int i);

double frobenius_sq(const Matrix& m);

// splitmix64. The one PRNG in the system; bit-compatible across
// implementations by construction.
struct Rng {
  std::uint64_t state = 0;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // next()/2^64 truncated to the 53-bit mantissa, so the result is an
  // exactly representable double in [0,1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();

  std::uint64_t bounded(std::uint64_t n);

  // Independent sub-stream: splitmix64 applied to seed XOR stream_id.
  static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(Rng(seed ^ stream_id).next());
  }
};

double rng_uniform(Rng& rng, double lo, double hi);

// Fisher-Yates, descending, driven by Rng::bounded.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.bounded(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace zsl
