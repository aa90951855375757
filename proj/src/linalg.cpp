#include "ngalore/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "ngalore/error.hpp"

namespace ngalore {

namespace {

std::string shape_str(const Matrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                          shape_str(b));
  }
}

double column_dot(const Matrix& a, std::size_t p, std::size_t q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) sum += a(i, p) * a(i, q);
  return sum;
}

// Removes from column j its components along columns [0, j).
void project_out_previous(Matrix& a, std::size_t j) {
  for (std::size_t p = 0; p < j; ++p) {
    const double coeff = column_dot(a, p, j);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) -= coeff * a(i, p);
  }
}

double column_norm(const Matrix& a, std::size_t j) { return std::sqrt(column_dot(a, j, j)); }

void scale_column(Matrix& a, std::size_t j, double factor) {
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) *= factor;
}

struct SmallSvd {
  Matrix left;   // b x b
  std::vector<double> sigma;
  Matrix right;  // b x b
};

// One-sided Jacobi SVD of a small square matrix.
SmallSvd jacobi_svd(const Matrix& b) {
  const std::size_t k = b.cols();
  Matrix work = b;
  Matrix right = Matrix::identity(k);
  constexpr std::size_t kMaxSweeps = 80;
  const double eps = std::numeric_limits<double>::epsilon();

  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double alpha = column_dot(work, p, p);
        const double beta = column_dot(work, q, q);
        const double gamma = column_dot(work, p, q);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < k; ++i) {
          const double wp = work(i, p);
          const double wq = work(i, q);
          work(i, p) = c * wp - s * wq;
          work(i, q) = s * wp + c * wq;
          const double vp = right(i, p);
          const double vq = right(i, q);
          right(i, p) = c * vp - s * vq;
          right(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(k);
  for (std::size_t j = 0; j < k; ++j) norms[j] = column_norm(work, j);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double largest = k == 0 ? 0.0 : norms[order[0]];
  SmallSvd out{Matrix(k, k), std::vector<double>(k), Matrix(k, k)};
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    const double sigma = norms[src];
    const bool null_direction = largest == 0.0 || sigma <= 1e-14 * largest;
    out.sigma[j] = null_direction ? 0.0 : sigma;
    for (std::size_t i = 0; i < k; ++i) {
      out.left(i, j) = null_direction ? 0.0 : work(i, src) / sigma;
      out.right(i, j) = right(i, src);
    }
  }
  orthonormalize_columns(out.left);
  return out;
}

}  // namespace

double CholeskyFactor::min_pivot() const noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lower_.rows(); ++i) best = std::min(best, lower_(i, i));
  return best;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: inner dimension mismatch " + shape_str(a) + " * " +
                          shape_str(b));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("matmul_tn: row mismatch " + shape_str(a) + "^T * " + shape_str(b));
  }
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("matmul_nt: column mismatch " + shape_str(a) + " * " + shape_str(b) +
                          "^T");
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += arow[k] * brow[k];
      c(i, j) = sum;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  if (a.empty()) return {};
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  auto out = c.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  auto out = c.data();
  auto in = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= in[i];
  return c;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix c = a;
  for (double& x : c.data()) x *= factor;
  return c;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require_same_shape(x, y, "axpy");
  auto out = y.data();
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * in[i];
}

double frobenius_norm(const Matrix& a) {
  double sum = 0.0;
  for (double x : a.data()) sum += x * x;
  return std::sqrt(sum);
}

double max_abs(std::span<const double> v) {
  double best = 0.0;
  for (double x : v) best = std::max(best, std::abs(x));
  return best;
}

double max_abs(const Matrix& a) { return max_abs(a.data()); }

double orthonormality_error(const Matrix& a) {
  const Matrix gram = matmul_tn(a, a);
  double worst = 0.0;
  for (std::size_t i = 0; i < gram.rows(); ++i)
    for (std::size_t j = 0; j < gram.cols(); ++j)
      worst = std::max(worst, std::abs(gram(i, j) - (i == j ? 1.0 : 0.0)));
  return worst;
}

void orthonormalize_columns(Matrix& a) {
  if (a.cols() > a.rows()) {
    throw InvalidArgument("orthonormalize_columns: more columns than rows (" + shape_str(a) + ")");
  }
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double original = column_norm(a, j);
    project_out_previous(a, j);
    project_out_previous(a, j);
    double norm = column_norm(a, j);
    if (original == 0.0 || !(norm > 1e-12 * original)) {
      // Dependent column: replace with the standard basis vector whose
      // residual is largest. Some residual is at least sqrt((n - j) / n).
      std::size_t best = 0;
      double best_norm = -1.0;
      for (std::size_t e = 0; e < a.rows(); ++e) {
        for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = i == e ? 1.0 : 0.0;
        project_out_previous(a, j);
        const double r = column_norm(a, j);
        if (r > best_norm) {
          best_norm = r;
          best = e;
        }
      }
      for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = i == best ? 1.0 : 0.0;
      project_out_previous(a, j);
      project_out_previous(a, j);
      norm = column_norm(a, j);
      if (!(norm > 0.0)) throw NumericalFailure("orthonormalize_columns: basis completion failed");
    }
    scale_column(a, j, 1.0 / norm);
  }
}

CompactSVD compact_svd(const Matrix& a, std::size_t rank, const SvdOptions& options) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const std::size_t k = std::min(n, m);
  if (rank < 1 || rank > k) {
    throw InvalidArgument("compact_svd: rank " + std::to_string(rank) + " outside [1, " +
                          std::to_string(k) + "]");
  }
  if (!a.all_finite()) throw NumericalFailure("compact_svd: input contains NaN or Inf");

  const std::size_t block = std::min(k, rank + options.oversample);

  // Fixed-seed start block so refreshes are reproducible.
  std::mt19937_64 gen(0x5eed5eedULL);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Matrix right(m, block);
  for (double& x : right.data()) x = uniform(gen);
  orthonormalize_columns(right);

  Matrix left;
  SmallSvd core;
  std::vector<double> previous;
  std::size_t iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    left = matmul(a, right);
    orthonormalize_columns(left);
    Matrix projected = matmul_tn(a, left);  // A^T U, m x block
    right = projected;
    orthonormalize_columns(right);
    core = jacobi_svd(matmul_tn(projected, right));  // U^T A V, block x block

    std::vector<double> current(core.sigma.begin(), core.sigma.begin() + rank);
    if (!previous.empty()) {
      const double reference = current[0];
      double change = 0.0;
      for (std::size_t i = 0; i < rank; ++i)
        change = std::max(change, std::abs(current[i] - previous[i]));
      if (reference == 0.0 || change <= options.tolerance * reference) {
        converged = true;
        break;
      }
    }
    previous = std::move(current);
  }
  if (!converged) {
    throw NumericalFailure("compact_svd: no convergence after " + std::to_string(iter) +
                               " iterations",
                           iter);
  }

  CompactSVD out{Matrix(n, rank), std::vector<double>(core.sigma.begin(),
                                                      core.sigma.begin() + rank),
                 Matrix(m, rank), iter};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < rank; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < block; ++p) sum += left(i, p) * core.left(p, j);
      out.left(i, j) = sum;
    }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < rank; ++j) {
      double sum = 0.0;
      for (std::size_t p = 0; p < block; ++p) sum += right(i, p) * core.right(p, j);
      out.right(i, j) = sum;
    }

  for (std::size_t j = 0; j < rank; ++j) {
    std::size_t pivot = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(out.left(i, j)) > std::abs(out.left(pivot, j))) pivot = i;
    if (out.left(pivot, j) < 0.0) {
      scale_column(out.left, j, -1.0);
      scale_column(out.right, j, -1.0);
    }
  }
  return out;
}

CholeskyFactor cholesky_factor(const Matrix& s) {
  const std::size_t k = s.rows();
  if (k == 0 || s.cols() != k) {
    throw InvalidArgument("cholesky_factor: matrix must be square, got " + shape_str(s));
  }
  const double tol = 1e-12 * std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (!(std::abs(s(i, j) - s(j, i)) <= tol)) {
        throw InvalidArgument("cholesky_factor: matrix is not symmetric at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      }

  Matrix lower(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    double diag = s(j, j);
    for (std::size_t p = 0; p < j; ++p) diag -= lower(j, p) * lower(j, p);
    if (!(diag > 0.0)) {
      throw NotPositiveDefinite("cholesky_factor: non-positive pivot " + std::to_string(diag) +
                                    " at index " + std::to_string(j),
                                j);
    }
    const double root = std::sqrt(diag);
    lower(j, j) = root;
    for (std::size_t i = j + 1; i < k; ++i) {
      double sum = s(i, j);
      for (std::size_t p = 0; p < j; ++p) sum -= lower(i, p) * lower(j, p);
      lower(i, j) = sum / root;
    }
  }
  return CholeskyFactor(std::move(lower));
}

std::vector<double> solve_cholesky(const CholeskyFactor& factor, std::span<const double> y) {
  const Matrix& lower = factor.lower();
  const std::size_t k = lower.rows();
  if (y.size() != k) {
    throw InvalidArgument("solve_cholesky: right-hand side has length " +
                          std::to_string(y.size()) + ", expected " + std::to_string(k));
  }
  std::vector<double> z(y.begin(), y.end());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t p = 0; p < i; ++p) z[i] -= lower(i, p) * z[p];
    z[i] /= lower(i, i);
  }
  for (std::size_t i = k; i-- > 0;) {
    for (std::size_t p = i + 1; p < k; ++p) z[i] -= lower(p, i) * z[p];
    z[i] /= lower(i, i);
  }
  return z;
}

}  // namespace ngalore
