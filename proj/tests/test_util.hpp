#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ngalore/matrix.hpp"

namespace ngalore::test {

inline std::vector<double> gaussian(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  return Matrix(rows, cols, gaussian(rows * cols, gen));
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_diff(const Matrix& a, const Matrix& b) { return max_diff(a.data(), b.data()); }

}  // namespace ngalore::test
