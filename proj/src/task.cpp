#include "ngalore/task.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"

#ifndef NGALORE_DEFAULT_CORPUS
#define NGALORE_DEFAULT_CORPUS "data/corpus.txt"
#endif

namespace ngalore {

namespace {

enum Stream : std::uint32_t { kInit = 0, kTrain = 1, kValidation = 2 };

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream, std::int64_t step) {
  const auto s = static_cast<std::uint64_t>(step);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return std::mt19937_64(seq);
}

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(gen);
  return m;
}

std::vector<unsigned char> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("char-lm: cannot open corpus '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::lowrank_regression:
      return "lowrank-regression";
    case TaskKind::mlp_classify:
      return "mlp-classify";
    case TaskKind::char_lm:
      return "char-lm";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "lowrank-regression") return TaskKind::lowrank_regression;
  if (text == "mlp-classify") return TaskKind::mlp_classify;
  if (text == "char-lm") return TaskKind::char_lm;
  throw InvalidArgument("unknown task kind '" + std::string(text) +
                        "' (expected lowrank-regression, mlp-classify or char-lm)");
}

std::filesystem::path default_corpus_path() { return NGALORE_DEFAULT_CORPUS; }

Task make_task(TaskKind kind, std::uint64_t seed, const TaskOptions& options) {
  if (options.batch_size == 0 || options.validation_size == 0) {
    throw InvalidArgument("task: batch and validation sizes must be positive");
  }
  Task task;
  task.kind_ = kind;
  task.seed_ = seed;
  task.options_ = options;
  auto gen = make_rng(seed, kInit, 0);

  switch (kind) {
    case TaskKind::lowrank_regression: {
      const std::size_t d = options.regression_dim;
      const std::size_t r = options.planted_rank;
      if (d == 0 || r == 0 || r > d) throw InvalidArgument("lowrank-regression: bad dimensions");
      const Matrix a = gaussian(d, r, 1.0, gen);
      const Matrix b = gaussian(d, r, 1.0, gen);
      // Unit output variance per coordinate for standard normal inputs.
      task.planted_ = scale(matmul_nt(a, b), 1.0 / std::sqrt(static_cast<double>(d * r)));
      task.initial_.push_back({"W", Matrix(d, d)});
      Matrix noise;
      task.validation_ = task.regression_batch(options.validation_size, kValidation, 0, &noise);
      double sum = 0.0;
      for (double e : noise.data()) sum += e * e;
      task.noise_floor_ = sum / static_cast<double>(noise.rows());
      break;
    }
    case TaskKind::mlp_classify: {
      const std::size_t d = options.classify_dim;
      const std::size_t h = options.classify_hidden;
      const std::size_t k = options.classes;
      if (d == 0 || h == 0 || k < 2) throw InvalidArgument("mlp-classify: bad dimensions");
      task.centers_ = gaussian(k, d, options.center_scale, gen);
      task.initial_.push_back({"W1", gaussian(d, h, 1.0 / std::sqrt(static_cast<double>(d)), gen)});
      task.initial_.push_back({"b1", Matrix(1, h)});
      task.initial_.push_back({"W2", gaussian(h, k, 1.0 / std::sqrt(static_cast<double>(h)), gen)});
      task.initial_.push_back({"b2", Matrix(1, k)});
      task.validation_ = task.mixture_batch(options.validation_size, kValidation, 0);
      break;
    }
    case TaskKind::char_lm: {
      const std::vector<unsigned char> bytes = read_corpus(options.corpus_path);
      const std::size_t ctx = options.context;
      if (ctx == 0 || options.lm_hidden == 0) throw InvalidArgument("char-lm: bad dimensions");
      std::vector<bool> present(256, false);
      for (unsigned char c : bytes) present[c] = true;
      std::vector<int> index(256, -1);
      for (int c = 0; c < 256; ++c) {
        if (present[static_cast<std::size_t>(c)]) {
          index[static_cast<std::size_t>(c)] = static_cast<int>(task.vocabulary_.size());
          task.vocabulary_.push_back(static_cast<unsigned char>(c));
        }
      }
      task.tokens_.reserve(bytes.size());
      for (unsigned char c : bytes) task.tokens_.push_back(index[c]);

      const std::size_t n = bytes.size();
      task.split_ = static_cast<std::size_t>(
          std::floor(static_cast<double>(n) * (1.0 - options.validation_fraction)));
      if (task.vocabulary_.size() < 2 || task.split_ <= ctx + 1 || n - task.split_ < 2) {
        throw InvalidArgument("char-lm: corpus '" + options.corpus_path.string() +
                              "' is too small");
      }
      const std::size_t v = task.vocabulary_.size();
      const std::size_t h = options.lm_hidden;
      task.initial_.push_back(
          {"W1", gaussian(ctx * v, h, 1.0 / std::sqrt(static_cast<double>(ctx)), gen)});
      task.initial_.push_back({"b1", Matrix(1, h)});
      task.initial_.push_back({"W2", gaussian(h, v, 1.0 / std::sqrt(static_cast<double>(h)), gen)});
      task.initial_.push_back({"b2", Matrix(1, v)});

      const std::size_t start = std::max(task.split_, ctx);
      const std::size_t count = std::min(options.validation_size, n - start);
      std::vector<std::size_t> positions(count);
      for (std::size_t i = 0; i < count; ++i) positions[i] = start + i * (n - start) / count;
      task.validation_ = task.corpus_batch(positions);
      break;
    }
  }
  return task;
}

Batch Task::regression_batch(std::size_t count, std::uint64_t stream, std::int64_t step,
                             Matrix* noise_out) const {
  auto gen = make_rng(seed_, static_cast<std::uint32_t>(stream), step);
  const std::size_t d = options_.regression_dim;
  Batch batch;
  batch.inputs = gaussian(count, d, 1.0, gen);
  Matrix noise = gaussian(count, d, options_.noise_std, gen);
  batch.targets = add(matmul(batch.inputs, planted_), noise);
  if (noise_out) *noise_out = std::move(noise);
  return batch;
}

Batch Task::mixture_batch(std::size_t count, std::uint64_t stream, std::int64_t step) const {
  auto gen = make_rng(seed_, static_cast<std::uint32_t>(stream), step);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(options_.classes) - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = options_.classify_dim;
  Batch batch;
  batch.inputs = Matrix(count, d);
  batch.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = pick(gen);
    batch.labels[i] = label;
    auto center = centers_.row(static_cast<std::size_t>(label));
    auto row = batch.inputs.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] = center[j] + normal(gen);
  }
  return batch;
}

Batch Task::corpus_batch(const std::vector<std::size_t>& positions) const {
  const std::size_t ctx = options_.context;
  const std::size_t v = vocabulary_.size();
  Batch batch;
  batch.inputs = Matrix(positions.size(), ctx * v);
  batch.labels.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t p = positions[i];
    for (std::size_t k = 0; k < ctx; ++k) {
      const auto token = static_cast<std::size_t>(tokens_[p - ctx + k]);
      batch.inputs(i, k * v + token) = 1.0;
    }
    batch.labels[i] = tokens_[p];
  }
  return batch;
}

Batch Task::train_batch(std::int64_t step) const {
  switch (kind_) {
    case TaskKind::lowrank_regression:
      return regression_batch(options_.batch_size, kTrain, step, nullptr);
    case TaskKind::mlp_classify:
      return mixture_batch(options_.batch_size, kTrain, step);
    case TaskKind::char_lm: {
      auto gen = make_rng(seed_, kTrain, step);
      std::uniform_int_distribution<std::size_t> pick(options_.context, split_ - 1);
      std::vector<std::size_t> positions(options_.batch_size);
      for (std::size_t& p : positions) p = pick(gen);
      return corpus_batch(positions);
    }
  }
  throw InvalidArgument("task: unknown kind");
}

ForwardResult Task::forward(const std::vector<Parameter>& params, const Batch& batch) const {
  if (params.size() != initial_.size()) {
    throw InvalidArgument("forward: expected " + std::to_string(initial_.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != initial_[i].name || !params[i].value.same_shape(initial_[i].value)) {
      throw InvalidArgument("forward: parameter " + std::to_string(i) + " ('" + params[i].name +
                            "') does not match the task layout");
    }
  }
  ForwardResult out;
  Graph& g = out.graph;
  const NodeId x = g.constant(batch.inputs);
  if (kind_ == TaskKind::lowrank_regression) {
    const NodeId w = g.parameter(params[0].name, params[0].value);
    g.squared_error(g.matmul(x, w), batch.targets);
  } else {
    const std::size_t classes = initial_[3].value.cols();
    for (int label : batch.labels) {
      if (label < 0 || static_cast<std::size_t>(label) >= classes) {
        throw InvalidArgument("forward: token id " + std::to_string(label) +
                              " outside the vocabulary");
      }
    }
    const NodeId w1 = g.parameter(params[0].name, params[0].value);
    const NodeId b1 = g.parameter(params[1].name, params[1].value);
    const NodeId w2 = g.parameter(params[2].name, params[2].value);
    const NodeId b2 = g.parameter(params[3].name, params[3].value);
    const NodeId hidden = g.tanh(g.add_bias(g.matmul(x, w1), b1));
    g.softmax_cross_entropy(g.add_bias(g.matmul(hidden, w2), b2), batch.labels);
  }
  out.loss = g.loss();
  return out;
}

double Task::loss(const std::vector<Parameter>& params, const Batch& batch) const {
  return forward(params, batch).loss;
}

}  // namespace ngalore
