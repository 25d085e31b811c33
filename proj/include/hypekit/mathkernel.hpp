#pragma once

// Dense real-vector primitives shared by every score function.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace hypekit {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Sum over coordinates of the element-wise product of all input vectors.
/// Throws DimensionError (naming the first offending index) on a length
/// mismatch and on an empty list.
double dotsum(std::span<const std::span<const double>> vectors);
double dotsum(std::initializer_list<std::span<const double>> vectors);

/// Circular left rotation: out[t] = v[(t + shift) mod len(v)].
Vec circshift(std::span<const double> v, std::size_t shift);

/// Output length of a valid (unpadded) 1D correlation: floor((d - l) / s) + 1.
/// Throws DimensionError when l > d or l == 0, ConfigError when s == 0.
std::size_t feature_map_size(std::size_t input_len, std::size_t filter_len,
                             std::size_t stride);

/// Valid cross-correlation without kernel flipping:
/// out[t] = sum_u v[t*stride + u] * w[u] for t in [0, q).
Vec conv1d(std::span<const double> v, std::span<const double> w, std::size_t stride);

/// Central-difference gradient of f at x, one coordinate at a time.
Vec finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> x, double eps = 1e-5);

}  // namespace hypekit
