#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ngalore {

/// Dense row-major matrix of doubles.
///
/// A default-constructed matrix is 0x0 and represents "no storage"; every
/// other constructor requires positive dimensions.
class Matrix {
 public:
  Matrix() = default;

  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);

  /// Takes ownership of row-major `data`. Rejects a length mismatch and any
  /// non-finite entry.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// Column vector (n x 1).
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const noexcept;

  /// Bitwise-equal shape and contents.
  friend bool operator==(const Matrix& a, const Matrix& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace ngalore
