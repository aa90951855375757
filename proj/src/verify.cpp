#include "ngalore/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "ngalore/linalg.hpp"
#include "ngalore/natgrad.hpp"
#include "ngalore/optimizer.hpp"
#include "ngalore/train.hpp"

namespace ngalore::verify {

namespace {

constexpr double kLambdas[] = {1e-4, 1e-2, 1.0};

std::vector<double> gaussian_vector(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(gen);
  return v;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  return Matrix(rows, cols, gaussian_vector(rows * cols, gen));
}

std::size_t uniform_size(std::size_t lo, std::size_t hi, std::mt19937_64& gen) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
}

double relative_inf_diff(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  const double scale = max_abs(b);
  return scale == 0.0 ? diff : diff / scale;
}

std::string format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

}  // namespace

WoodburyStats check_woodbury(std::size_t instances, std::uint64_t seed, double correction_sign) {
  std::mt19937_64 gen(seed);
  WoodburyStats stats;
  stats.min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t d = uniform_size(1, 64, gen);
    const std::size_t s = uniform_size(1, 8, gen);
    const double lambda = kLambdas[n % 3];

    std::vector<std::vector<double>> columns;
    GradHistory history(s, lambda, d);
    for (std::size_t j = 0; j < s; ++j) {
      columns.push_back(gaussian_vector(d, gen));
      history.push(Matrix::column(columns.back()));
    }
    const std::vector<double> g = gaussian_vector(d, gen);

    FimWorkspace ws;
    const Matrix out =
        detail::apply_inverse_fim_signed(history, Matrix::column(g), correction_sign, &ws);
    auto gt = out.data();

    // (lambda I + G G^T) g~ - g, with G^T g~ formed first.
    std::vector<double> residual(d);
    for (std::size_t t = 0; t < d; ++t) residual[t] = lambda * gt[t] - g[t];
    for (const auto& c : columns) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += c[t] * gt[t];
      for (std::size_t t = 0; t < d; ++t) residual[t] += c[t] * dot;
    }
    stats.max_residual = std::max(stats.max_residual, max_abs(residual) / max_abs(g));

    const auto oracle = reference::dense_inverse_fim(columns, lambda, g);
    stats.max_oracle_diff = std::max(stats.max_oracle_diff, relative_inf_diff(gt, oracle));
    const auto direct = reference::woodbury_direct(columns, lambda, g);
    stats.max_formula_diff = std::max(stats.max_formula_diff, relative_inf_diff(gt, direct));
    stats.min_pivot = std::min(stats.min_pivot, ws.min_pivot);
    ++stats.instances;
  }
  return stats;
}

ShermanMorrisonStats check_sherman_morrison(std::size_t instances, std::uint64_t seed,
                                            double correction_sign) {
  std::mt19937_64 gen(seed);
  ShermanMorrisonStats stats;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t d = uniform_size(1, 64, gen);
    const double lambda = kLambdas[n % 3];
    const std::vector<double> c = gaussian_vector(d, gen);
    const std::vector<double> g = n % 2 == 0 ? c : gaussian_vector(d, gen);

    GradHistory history(1, lambda, d);
    history.push(Matrix::column(c));
    const Matrix out =
        detail::apply_inverse_fim_signed(history, Matrix::column(g), correction_sign, nullptr);

    long double cc = 0.0L, cg = 0.0L;
    for (std::size_t t = 0; t < d; ++t) {
      cc += static_cast<long double>(c[t]) * c[t];
      cg += static_cast<long double>(c[t]) * g[t];
    }
    const long double lam = lambda;
    std::vector<double> expected(d);
    for (std::size_t t = 0; t < d; ++t) {
      expected[t] = n % 2 == 0
                        ? static_cast<double>(c[t] / (lam + cc))
                        : static_cast<double>(g[t] / lam - c[t] * cg / (lam * (lam + cc)));
    }
    stats.max_diff = std::max(stats.max_diff, relative_inf_diff(out.data(), expected));
    ++stats.instances;
  }
  return stats;
}

SvdStats check_svd(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SvdStats stats;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t rows = uniform_size(2, 16, gen);
    const std::size_t cols = uniform_size(2, 16, gen);
    const std::size_t k = std::min(rows, cols);
    const bool planted = n % 2 == 0;
    const std::size_t rank = uniform_size(1, k, gen);

    Matrix a;
    if (planted) {
      const std::size_t true_rank = uniform_size(1, rank, gen);
      a = matmul_nt(gaussian_matrix(rows, true_rank, gen), gaussian_matrix(cols, true_rank, gen));
    } else {
      a = gaussian_matrix(rows, cols, gen);
    }

    const CompactSVD svd = compact_svd(a, rank);
    stats.max_orthonormality = std::max(
        {stats.max_orthonormality, orthonormality_error(svd.left), orthonormality_error(svd.right)});

    const reference::FullSvd oracle = reference::jacobi_svd(a);
    for (std::size_t i = 0; i < rank; ++i) {
      stats.max_sigma_diff =
          std::max(stats.max_sigma_diff, std::abs(svd.sigma[i] - oracle.sigma[i]) / oracle.sigma[0]);
    }

    if (planted) {
      Matrix scaled = svd.left;
      for (std::size_t i = 0; i < scaled.rows(); ++i)
        for (std::size_t j = 0; j < rank; ++j) scaled(i, j) *= svd.sigma[j];
      const Matrix recon = matmul_nt(scaled, svd.right);
      stats.max_exact_reconstruction = std::max(
          stats.max_exact_reconstruction, frobenius_norm(subtract(a, recon)) / frobenius_norm(a));
    }
    ++stats.instances;
  }
  return stats;
}

CholeskyStats check_cholesky(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  CholeskyStats stats;
  stats.min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t k = uniform_size(1, 16, gen);
    Matrix s;
    if (n % 2 == 0) {
      const double lambda = kLambdas[(n / 2) % 3];
      const Matrix g = gaussian_matrix(uniform_size(1, 64, gen), k, gen);
      s = matmul_tn(g, g);
      for (double& x : s.data()) x /= lambda;
      for (std::size_t i = 0; i < k; ++i) s(i, i) += 1.0;
    } else {
      const Matrix b = gaussian_matrix(k, k, gen);
      s = matmul_tn(b, b);
      for (std::size_t i = 0; i < k; ++i) s(i, i) += 0.1;
    }
    const std::vector<double> y = gaussian_vector(k, gen);

    const CholeskyFactor f = cholesky_factor(s);
    const std::vector<double> z = solve_cholesky(f, y);
    std::vector<double> r(k);
    for (std::size_t i = 0; i < k; ++i) {
      double sum = -y[i];
      for (std::size_t j = 0; j < k; ++j) sum += s(i, j) * z[j];
      r[i] = sum;
    }
    stats.max_residual = std::max(stats.max_residual, max_abs(r) / max_abs(y));
    const Matrix llt = matmul_nt(f.lower(), f.lower());
    stats.max_reconstruction =
        std::max(stats.max_reconstruction, frobenius_norm(subtract(llt, s)) / frobenius_norm(s));
    stats.min_pivot = std::min(stats.min_pivot, f.min_pivot());
    ++stats.instances;
  }
  return stats;
}

std::vector<TaskGradientStats> check_gradients(std::uint64_t seed, const TaskOptions& options) {
  std::vector<TaskGradientStats> out;
  for (TaskKind kind : {TaskKind::lowrank_regression, TaskKind::mlp_classify, TaskKind::char_lm}) {
    const Task task = make_task(kind, seed, options);
    // Perturb away from the zero initialization so every term is exercised.
    std::vector<Parameter> params = task.initial_parameters();
    std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 0.05);
    for (Parameter& p : params)
      for (double& x : p.value.data()) x += normal(gen);
    out.push_back({kind, reference::finite_difference_check(task, params, task.train_batch(0))});
  }
  return out;
}

LadderStats check_disabled_history_ladder(TaskKind kind, std::int64_t steps, std::uint64_t seed,
                                          const TaskOptions& options) {
  const Task task = make_task(kind, seed, options);
  OptimizerConfig galore;
  galore.mode = Mode::galore;
  galore.lr = 1e-2;
  galore.rank = 8;
  galore.refresh_period = 50;
  OptimizerConfig natural = galore;
  natural.mode = Mode::natural_galore;
  natural.history = 0;

  Trainer a(task, galore);
  Trainer b(task, natural);
  bool equal = true;
  for (std::int64_t t = 0; t < steps && equal; ++t) {
    equal = a.advance() == b.advance();
    for (std::size_t i = 0; i < a.slots().size() && equal; ++i)
      equal = a.slots()[i].theta == b.slots()[i].theta;
  }
  return {kind, steps, equal};
}

double check_adam_reference(std::int64_t steps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  constexpr std::size_t rows = 3, cols = 4;
  const Matrix target = gaussian_matrix(rows, cols, gen);

  OptimizerConfig config;
  config.mode = Mode::adam;
  config.lr = 0.05;
  std::vector<ParamSlot> slots;
  slots.push_back(make_slot("theta", Matrix(rows, cols), config));

  std::vector<reference::ScalarAdam> scalar(
      rows * cols, reference::ScalarAdam(config.adam.beta1, config.adam.beta2, config.adam.epsilon,
                                         config.adam.bias_correction,
                                         config.adam.eps_placement == EpsPlacement::inside_root));
  std::vector<double> theta(rows * cols, 0.0);

  double worst = 0.0;
  for (std::int64_t t = 0; t < steps; ++t) {
    const std::vector<double> noise = gaussian_vector(rows * cols, gen);
    Matrix grad(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i) {
      grad.data()[i] = slots[0].theta.data()[i] - target.data()[i] + 0.1 * noise[i];
      const double g = theta[i] - target.data()[i] + 0.1 * noise[i];
      theta[i] -= config.lr * scalar[i].update(g);
    }
    step(slots, {{"theta", grad}}, config, t);
    for (std::size_t i = 0; i < rows * cols; ++i)
      worst = std::max(worst, std::abs(slots[0].theta.data()[i] - theta[i]));
  }
  return worst;
}

std::vector<SuiteResult> run_verification(const VerifyOptions& options) {
  const double sign = options.flip_woodbury_sign ? -1.0 : 1.0;
  std::vector<SuiteResult> results;

  {
    const WoodburyStats w = check_woodbury(500, 1, sign);
    const ShermanMorrisonStats sm = check_sherman_morrison(100, 2, sign);
    const bool ok = w.max_residual <= 1e-8 && w.max_oracle_diff <= 1e-10 &&
                    w.max_formula_diff <= 1e-10 && w.min_pivot > 0.0 && sm.max_diff <= 1e-12;
    results.push_back({"woodbury", ok,
                       format("residual %.3e, dense-oracle diff %.3e, two-formula diff %.3e",
                              w.max_residual, w.max_oracle_diff, w.max_formula_diff) +
                           format(", rank-1 closed-form diff %.3e", sm.max_diff)});
  }
  {
    const SvdStats s = check_svd(200, 3);
    const bool ok = s.max_orthonormality <= 1e-10 && s.max_exact_reconstruction <= 1e-8 &&
                    s.max_sigma_diff <= 1e-8;
    results.push_back({"svd", ok,
                       format("orthonormality %.3e, reconstruction %.3e, sigma diff %.3e",
                              s.max_orthonormality, s.max_exact_reconstruction, s.max_sigma_diff)});
  }
  {
    const CholeskyStats c = check_cholesky(1000, 4);
    const bool ok = c.max_residual <= 1e-9 && c.max_reconstruction <= 1e-10 && c.min_pivot > 0.0;
    results.push_back({"cholesky", ok,
                       format("residual %.3e, reconstruction %.3e, min pivot %.3e", c.max_residual,
                              c.max_reconstruction, c.min_pivot)});
  }
  {
    bool ok = true;
    std::string detail;
    for (const TaskGradientStats& g : check_gradients(5)) {
      ok = ok && g.check.max_relative_error <= 1e-5;
      if (!detail.empty()) detail += ", ";
      detail += std::string(to_string(g.task)) + format(" %.3e", g.check.max_relative_error);
    }
    results.push_back({"gradient-check", ok, detail});
  }
  {
    bool ok = true;
    std::string detail;
    for (TaskKind kind : {TaskKind::lowrank_regression, TaskKind::mlp_classify, TaskKind::char_lm}) {
      const LadderStats l = check_disabled_history_ladder(kind, 200, 6);
      ok = ok && l.bitwise_equal;
      if (!detail.empty()) detail += ", ";
      detail += std::string(to_string(kind)) + (l.bitwise_equal ? " identical" : " DIFFERS");
    }
    const double adam_diff = check_adam_reference(100, 7);
    ok = ok && adam_diff <= 1e-14;
    detail += format(", adam vs scalar reference %.3e", adam_diff);
    results.push_back({"mode-reduction", ok, detail});
  }
  return results;
}

}  // namespace ngalore::verify
