#include "ngalore/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

namespace {

void require_positive(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw InvalidArgument("matrix dimensions must be positive, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  require_positive(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_positive(rows, cols);
  if (data_.size() != rows * cols) {
    throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  if (!all_finite()) {
    throw InvalidArgument("matrix data contains NaN or Inf");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  return eye;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw InvalidArgument("ragged row list");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(n, m, std::move(data));
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool operator==(const Matrix& a, const Matrix& b) noexcept {
  if (!a.same_shape(b)) return false;
  return a.data_.empty() ||
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0;
}

}  // namespace ngalore
