#include "ngalore/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ngalore/error.hpp"
#include "ngalore/linalg.hpp"

namespace ngalore {

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const Graph::Node& Graph::checked(NodeId id) const {
  if (id >= nodes_.size()) throw InvalidArgument("graph: unknown node id");
  return nodes_[id];
}

NodeId Graph::parameter(std::string name, const Matrix& value) {
  Node n{Op::parameter};
  n.value = value;
  n.requires_grad = true;
  n.name = std::move(name);
  return push(std::move(n));
}

NodeId Graph::constant(Matrix value) {
  Node n{Op::constant};
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Node& na = checked(a);
  const Node& nb = checked(b);
  Node n{Op::matmul, {a, b}};
  n.value = ngalore::matmul(na.value, nb.value);
  n.requires_grad = na.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
  const Node& nx = checked(x);
  const Node& nb = checked(bias);
  if (nb.value.rows() != 1 || nb.value.cols() != nx.value.cols()) {
    throw InvalidArgument("add_bias: bias must be 1 x " + std::to_string(nx.value.cols()));
  }
  Node n{Op::add_bias, {x, bias}};
  n.value = nx.value;
  for (std::size_t i = 0; i < n.value.rows(); ++i) {
    auto row = n.value.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += nb.value(0, j);
  }
  n.requires_grad = nx.requires_grad || nb.requires_grad;
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  const Node& nx = checked(x);
  Node n{Op::tanh, {x, x}};
  n.value = nx.value;
  for (double& v : n.value.data()) v = std::tanh(v);
  n.requires_grad = nx.requires_grad;
  return push(std::move(n));
}

NodeId Graph::squared_error(NodeId prediction, Matrix target) {
  const Node& np = checked(prediction);
  if (!np.value.same_shape(target)) throw InvalidArgument("squared_error: target shape mismatch");
  double sum = 0.0;
  auto p = np.value.data();
  auto t = target.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double r = p[i] - t[i];
    sum += r * r;
  }
  Node n{Op::squared_error, {prediction, prediction}};
  n.value = Matrix(1, 1);
  n.value(0, 0) = sum / static_cast<double>(np.value.rows());
  n.requires_grad = np.requires_grad;
  n.aux = std::move(target);
  loss_ = push(std::move(n));
  return *loss_;
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
  const Node& nl = checked(logits);
  const Matrix& z = nl.value;
  if (labels.size() != z.rows()) {
    throw InvalidArgument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(z.rows()) + " rows");
  }
  Matrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= z.cols()) {
      throw InvalidArgument("softmax_cross_entropy: label " + std::to_string(label) +
                            " outside [0, " + std::to_string(z.cols()) + ")");
    }
    auto row = z.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double v : row) denom += std::exp(v - peak);
    const double log_denom = std::log(denom);
    total += log_denom - (row[static_cast<std::size_t>(label)] - peak);
    auto prow = probs.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) prow[j] = std::exp(row[j] - peak) / denom;
  }
  Node n{Op::cross_entropy, {logits, logits}};
  n.value = Matrix(1, 1);
  n.value(0, 0) = total / static_cast<double>(z.rows());
  n.requires_grad = nl.requires_grad;
  n.aux = std::move(probs);
  n.labels = std::move(labels);
  loss_ = push(std::move(n));
  return *loss_;
}

double Graph::loss() const {
  if (!loss_) throw UsageError("graph: no loss has been computed");
  return nodes_[*loss_].value(0, 0);
}

GradientMap Graph::backward(double seed) const {
  if (!loss_) throw UsageError("graph: backward() called before a forward pass produced a loss");

  std::vector<Matrix> adjoint(nodes_.size());
  const auto accumulate = [&](NodeId id, Matrix contribution) {
    if (!nodes_[id].requires_grad) return;
    if (adjoint[id].empty()) {
      adjoint[id] = std::move(contribution);
    } else {
      axpy(1.0, contribution, adjoint[id]);
    }
  };
  adjoint[*loss_] = Matrix(1, 1);
  adjoint[*loss_](0, 0) = seed;

  GradientMap grads;
  for (NodeId id = *loss_ + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (adjoint[id].empty() || !node.requires_grad) continue;
    const Matrix& up = adjoint[id];
    switch (node.op) {
      case Op::parameter: {
        auto [it, inserted] = grads.try_emplace(node.name, up);
        if (!inserted) axpy(1.0, up, it->second);
        break;
      }
      case Op::constant:
        break;
      case Op::matmul: {
        const Matrix& a = nodes_[node.inputs[0]].value;
        const Matrix& b = nodes_[node.inputs[1]].value;
        if (nodes_[node.inputs[0]].requires_grad) accumulate(node.inputs[0], matmul_nt(up, b));
        if (nodes_[node.inputs[1]].requires_grad) accumulate(node.inputs[1], matmul_tn(a, up));
        break;
      }
      case Op::add_bias: {
        accumulate(node.inputs[0], up);
        if (nodes_[node.inputs[1]].requires_grad) {
          Matrix col_sums(1, up.cols());
          for (std::size_t i = 0; i < up.rows(); ++i)
            for (std::size_t j = 0; j < up.cols(); ++j) col_sums(0, j) += up(i, j);
          accumulate(node.inputs[1], std::move(col_sums));
        }
        break;
      }
      case Op::tanh: {
        Matrix d = up;
        auto y = node.value.data();
        auto out = d.data();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= 1.0 - y[i] * y[i];
        accumulate(node.inputs[0], std::move(d));
        break;
      }
      case Op::squared_error: {
        const Matrix& p = nodes_[node.inputs[0]].value;
        const double factor = up(0, 0) * 2.0 / static_cast<double>(p.rows());
        Matrix d = subtract(p, node.aux);
        for (double& v : d.data()) v *= factor;
        accumulate(node.inputs[0], std::move(d));
        break;
      }
      case Op::cross_entropy: {
        const double factor = up(0, 0) / static_cast<double>(node.aux.rows());
        Matrix d = node.aux;
        for (std::size_t i = 0; i < d.rows(); ++i) d(i, static_cast<std::size_t>(node.labels[i])) -= 1.0;
        for (double& v : d.data()) v *= factor;
        accumulate(node.inputs[0], std::move(d));
        break;
      }
    }
  }
  return grads;
}

}  // namespace ngalore
