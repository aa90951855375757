#include "ngalore/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ngalore/error.hpp"

namespace ngalore::reference {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("naive_matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
      c(i, j) = sum;
    }
  return c;
}

namespace {

using LongVec = std::vector<long double>;

// Gaussian elimination with partial pivoting on a row-major n x n system.
LongVec solve_extended(LongVec a, LongVec b) {
  const std::size_t n = b.size();
  auto at = [&](std::size_t i, std::size_t j) -> long double& { return a[i * n + j]; };
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t i = col + 1; i < n; ++i)
      if (std::abs(at(i, col)) > std::abs(at(pivot, col))) pivot = i;
    if (at(pivot, col) == 0.0L) throw NumericalFailure("dense_solve: singular matrix");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(at(col, j), at(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t i = col + 1; i < n; ++i) {
      const long double f = at(i, col) / at(col, col);
      if (f == 0.0L) continue;
      for (std::size_t j = col; j < n; ++j) at(i, j) -= f * at(col, j);
      b[i] -= f * b[col];
    }
  }
  LongVec x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double sum = b[i];
    for (std::size_t j = i + 1; j < n; ++j) sum -= at(i, j) * x[j];
    x[i] = sum / at(i, i);
  }
  return x;
}

std::vector<double> to_double(const LongVec& v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<double> dense_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw InvalidArgument("dense_solve: shape mismatch");
  auto values = a.data();
  return to_double(solve_extended(LongVec(values.begin(), values.end()), LongVec(b.begin(), b.end())));
}

namespace {

FullSvd jacobi_tall(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(k);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (app == 0.0 || aqq == 0.0) continue;
        const double cosine = std::abs(apq) / std::sqrt(app * aqq);
        off = std::max(off, cosine);
        if (cosine <= eps) continue;
        // Rotation angle zeroing the (p, q) entry of W^T W.
        const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = w(i, p), y = w(i, q);
          w(i, p) = c * x - s * y;
          w(i, q) = s * x + c * y;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double x = v(i, p), y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    if (off <= eps) break;
  }
  std::vector<double> norms(k);
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += w(i, j) * w(i, j);
    norms[j] = std::sqrt(sum);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return norms[x] > norms[y]; });
  FullSvd out{Matrix(n, k), std::vector<double>(k), Matrix(k, k)};
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = norms[src];
    for (std::size_t i = 0; i < n; ++i)
      out.left(i, j) = norms[src] > 0.0 ? w(i, src) / norms[src] : 0.0;
    for (std::size_t i = 0; i < k; ++i) out.right(i, j) = v(i, src);
  }
  return out;
}

Matrix transposed(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace

FullSvd jacobi_svd(const Matrix& a) {
  if (a.rows() >= a.cols()) return jacobi_tall(a);
  FullSvd t = jacobi_tall(transposed(a));
  return {std::move(t.right), std::move(t.sigma), std::move(t.left)};
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("max_principal_angle: shape mismatch");
  }
  // sin(theta_max) = || (I - A A^T) B ||_2
  const Matrix coeff = naive_matmul(transposed(a), b);
  Matrix residual = b;
  const Matrix back = naive_matmul(a, coeff);
  for (std::size_t i = 0; i < residual.rows(); ++i)
    for (std::size_t j = 0; j < residual.cols(); ++j) residual(i, j) -= back(i, j);
  const double s = jacobi_svd(residual).sigma.front();
  return std::asin(std::min(1.0, s));
}

std::vector<double> dense_inverse_fim(std::span<const std::vector<double>> columns, double lambda,
                                      std::span<const double> g) {
  const std::size_t d = g.size();
  LongVec f(d * d, 0.0L);
  for (std::size_t i = 0; i < d; ++i) f[i * d + i] = lambda;
  for (const auto& c : columns) {
    if (c.size() != d) throw InvalidArgument("dense_inverse_fim: column length mismatch");
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        f[i * d + j] += static_cast<long double>(c[i]) * static_cast<long double>(c[j]);
  }
  return to_double(solve_extended(std::move(f), LongVec(g.begin(), g.end())));
}

std::vector<double> woodbury_direct(std::span<const std::vector<double>> columns, double lambda,
                                    std::span<const double> g) {
  const std::size_t s = columns.size();
  const std::size_t d = g.size();
  LongVec result(g.begin(), g.end());
  if (s > 0) {
    // (g - G (lambda I + G^T G)^{-1} G^T g) / lambda
    LongVec small(s * s, 0.0L);
    LongVec rhs(s, 0.0L);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t t = 0; t < d; ++t)
        rhs[i] += static_cast<long double>(columns[i][t]) * static_cast<long double>(g[t]);
      for (std::size_t j = 0; j < s; ++j) {
        long double dot = 0.0L;
        for (std::size_t t = 0; t < d; ++t)
          dot += static_cast<long double>(columns[i][t]) * static_cast<long double>(columns[j][t]);
        small[i * s + j] = dot + (i == j ? static_cast<long double>(lambda) : 0.0L);
      }
    }
    const LongVec w = solve_extended(std::move(small), std::move(rhs));
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t t = 0; t < d; ++t) result[t] -= static_cast<long double>(columns[i][t]) * w[i];
  }
  for (long double& x : result) x /= lambda;
  return to_double(result);
}

double ScalarAdam::update(double g) {
  m_ = beta1_ * m_ + (1.0 - beta1_) * g;
  v_ = beta2_ * v_ + (1.0 - beta2_) * g * g;
  beta1_power_ *= beta1_;
  beta2_power_ *= beta2_;
  double m = m_;
  double v = v_;
  if (bias_) {
    m /= 1.0 - beta1_power_;
    v /= 1.0 - beta2_power_;
  }
  return inside_ ? m / std::sqrt(v + eps_) : m / (std::sqrt(v) + eps_);
}

GradientCheck finite_difference_check(const Task& task, const std::vector<Parameter>& params,
                                       const Batch& batch, std::size_t max_entries, double step,
                                       double floor) {
  const GradientMap analytic = task.forward(params, batch).graph.backward();

  std::size_t total = 0;
  for (const Parameter& p : params) total += p.value.size();
  const std::size_t count = std::min(total, max_entries);

  std::vector<Parameter> work = params;
  GradientCheck out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t flat = count == total ? k : k * total / count;
    std::size_t which = 0;
    while (flat >= work[which].value.size()) flat -= work[which++].value.size();

    double& entry = work[which].value.data()[flat];
    const double saved = entry;
    entry = saved + step;
    const double up = task.loss(work, batch);
    entry = saved - step;
    const double down = task.loss(work, batch);
    entry = saved;

    const double fd = (up - down) / (2.0 * step);
    const auto it = analytic.find(work[which].name);
    const double ad = it == analytic.end() ? 0.0 : it->second.data()[flat];
    const double rel = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), floor});
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.checked;
  }
  return out;
}

}  // namespace ngalore::reference
