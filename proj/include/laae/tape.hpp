#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "laae/tensor.hpp"

namespace laae {

using NodeId = int32_t;
using GradMap = std::unordered_map<NodeId, Tensor>;

// Gradient accumulator used during the reverse sweep. add() sums into the
// per-node gradient buffer, allocating it on first touch.
class GradSink {
 public:
  explicit GradSink(size_t n) : grads_(n), live_(n, 0) {}
  void add(NodeId id, const Tensor& g);
  bool live(NodeId id) const { return live_[static_cast<size_t>(id)] != 0; }
  const Tensor& grad(NodeId id) const { return grads_[static_cast<size_t>(id)]; }

 private:
  std::vector<Tensor> grads_;
  std::vector<char> live_;
};

// Define-by-run tape for reverse-mode differentiation. One tape per forward
// pass; confined to a single thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;             // backward rules capture `this`
  Tape& operator=(const Tape&) = delete;

  // Records a leaf (input or parameter). Leaves have no backward rule.
  NodeId leaf(Tensor value);

  NodeId conv2d(NodeId input, NodeId weight, NodeId bias, int64_t stride, int64_t padding);
  NodeId conv_transpose2d(NodeId input, NodeId weight, NodeId bias, int64_t stride,
                          int64_t padding);
  NodeId dense(NodeId x, NodeId weight, NodeId bias);

  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId exp(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId reshape(NodeId x, Shape target);
  NodeId flatten(NodeId x);  // (N, d1, d2, ...) -> (N, d1*d2*...)

  NodeId sum(NodeId x);
  NodeId mean(NodeId x);

  // Records an op with a caller-supplied backward rule (used for fused loss
  // kernels). The rule adds contributions for every parent it differentiates.
  NodeId custom(Tensor value, std::vector<NodeId> parents,
                std::function<void(const Tensor& grad_out, GradSink& sink)> bwd);

  const Tensor& value(NodeId id) const;
  size_t size() const { return nodes_.size(); }

  // Reverse-mode accumulation from a scalar loss node. Returns dLoss/dParam
  // for every requested node id; parameters reused in several places get
  // their contributions summed.
  GradMap backward(NodeId loss, const std::vector<NodeId>& params) const;

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> parents;
    // Adds this node's contribution to its parents' gradients.
    std::function<void(const Tensor& grad_out, GradSink& sink)> backward;
  };

  NodeId push(Tensor value, std::vector<NodeId> parents,
              std::function<void(const Tensor&, GradSink&)> bwd);
  const Node& node(NodeId id) const;
  NodeId unary_pointwise(NodeId x, double (*fwd)(double),
                         double (*dfdx)(double x, double y));
  NodeId binary_pointwise(NodeId a, NodeId b, const char* name, int sign_b);

  std::vector<Node> nodes_;
};

}  // namespace laae
