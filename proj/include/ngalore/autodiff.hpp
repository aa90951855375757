#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ngalore/matrix.hpp"
#include "ngalore/optimizer.hpp"

namespace ngalore {

using NodeId = std::size_t;

/// Tape-style reverse-mode differentiation over matrix-valued nodes.
///
/// Nodes can only reference nodes created before them, so insertion order is
/// a topological order and the graph is acyclic by construction. backward()
/// walks the tape once in reverse, accumulating adjoints additively across
/// fan-out, and returns the gradient of the loss for every named parameter.
class Graph {
 public:
  NodeId parameter(std::string name, const Matrix& value);
  NodeId constant(Matrix value);

  NodeId matmul(NodeId a, NodeId b);
  /// x (B x c) plus a 1 x c row broadcast over every row.
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId tanh(NodeId x);

  /// Mean over rows of the squared error summed across columns. Sets the loss.
  NodeId squared_error(NodeId prediction, Matrix target);
  /// Mean negative log-likelihood of `labels` under softmax(logits). Sets the loss.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

  const Matrix& value(NodeId id) const { return nodes_.at(id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  bool has_loss() const noexcept { return loss_.has_value(); }
  double loss() const;

  /// Gradients of `seed * loss` with respect to each named parameter.
  /// Parameters bound more than once under the same name are summed.
  GradientMap backward(double seed = 1.0) const;

 private:
  enum class Op { parameter, constant, matmul, add_bias, tanh, squared_error, cross_entropy };

  struct Node {
    explicit Node(Op kind, std::array<NodeId, 2> in = {}) : op(kind), inputs(in) {}

    Op op;
    std::array<NodeId, 2> inputs;
    Matrix value;
    bool requires_grad = false;
    std::string name;         // parameter nodes
    Matrix aux;               // target (squared error) or softmax probabilities
    std::vector<int> labels;  // cross entropy
  };

  NodeId push(Node node);
  const Node& checked(NodeId id) const;

  std::vector<Node> nodes_;
  std::optional<NodeId> loss_;
};

}  // namespace ngalore
