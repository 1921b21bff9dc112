#pragma once

// Dense row-major matrices, stable softmax, seeded randomness and the
// central-difference gradient oracle shared by the rest of the library.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace qfsl {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of row-major `data`; its length must be rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  /// Exact element-wise comparison (bit-identity for finite values).
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws ConfigError when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// y = m * x for a column vector x.
std::vector<double> matvec(const Matrix& m, std::span<const double> x);
/// y = m^T * x.
std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);

/// Max-shifted softmax. Every component lies in (0, 1] for finite input.
std::vector<double> softmax(std::span<const double> z);

/// Throws DataError(ZeroNormAttribute) for a zero vector.
std::vector<double> l2_normalize(std::span<const double> v);

bool all_finite(std::span<const double> v);

/// SplitMix64 generator. Streams are identical across platforms for a seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform();
  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double gaussian();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.index(i);
    std::swap(items[i - 1], items[j]);
  }
}

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> x, double h);

}  // namespace qfsl
