#include "laae/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace laae {

void GradSink::add(NodeId id, const Tensor& g) {
  auto i = static_cast<size_t>(id);
  if (!live_[i]) {
    grads_[i] = g;
    live_[i] = 1;
    return;
  }
  Tensor& dst = grads_[i];
  if (!same_shape(dst, g))
    throw std::logic_error("gradient shape mismatch at node " + std::to_string(id) + ": " +
                           shape_str(dst.shape) + " vs " + shape_str(g.shape));
  for (size_t k = 0; k < dst.data.size(); ++k) dst.data[k] += g.data[k];
}

NodeId Tape::push(Tensor value, std::vector<NodeId> parents,
                  std::function<void(const Tensor&, GradSink&)> bwd) {
  for (NodeId p : parents)
    if (p < 0 || static_cast<size_t>(p) >= nodes_.size())
      throw std::invalid_argument("dangling node id " + std::to_string(p));
  nodes_.push_back(Node{std::move(value), std::move(parents), std::move(bwd)});
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
    throw std::invalid_argument("dangling node id " + std::to_string(id));
  return nodes_[static_cast<size_t>(id)];
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

NodeId Tape::leaf(Tensor value) { return push(std::move(value), {}, nullptr); }

NodeId Tape::conv2d(NodeId input, NodeId weight, NodeId bias, int64_t stride, int64_t padding) {
  const Tensor& in = value(input);
  const Tensor& w = value(weight);
  const Tensor& b = value(bias);
  Tensor out = conv2d_fwd(in, w, b, stride, padding);
  return push(std::move(out), {input, weight, bias},
              [this, input, weight, bias, stride, padding](const Tensor& g, GradSink& sink) {
                Tensor gi, gw, gb;
                conv2d_bwd(value(input), value(weight), g, stride, padding, gi, gw, gb);
                sink.add(input, gi);
                sink.add(weight, gw);
                sink.add(bias, gb);
              });
}

NodeId Tape::conv_transpose2d(NodeId input, NodeId weight, NodeId bias, int64_t stride,
                              int64_t padding) {
  Tensor out = conv_transpose2d_fwd(value(input), value(weight), value(bias), stride, padding);
  return push(std::move(out), {input, weight, bias},
              [this, input, weight, bias, stride, padding](const Tensor& g, GradSink& sink) {
                Tensor gi, gw, gb;
                conv_transpose2d_bwd(value(input), value(weight), g, stride, padding, gi, gw, gb);
                sink.add(input, gi);
                sink.add(weight, gw);
                sink.add(bias, gb);
              });
}

NodeId Tape::dense(NodeId x, NodeId weight, NodeId bias) {
  Tensor out = dense_fwd(value(x), value(weight), value(bias));
  return push(std::move(out), {x, weight, bias},
              [this, x, weight, bias](const Tensor& g, GradSink& sink) {
                Tensor gx, gw, gb;
                dense_bwd(value(x), value(weight), g, gx, gw, gb);
                sink.add(x, gx);
                sink.add(weight, gw);
                sink.add(bias, gb);
              });
}

NodeId Tape::unary_pointwise(NodeId x, double (*fwd)(double), double (*dfdx)(double, double)) {
  const Tensor& in = value(x);
  Tensor out(in.shape);
  for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = fwd(in.data[i]);
  return push(std::move(out), {x}, [this, x, dfdx](const Tensor& g, GradSink& sink) {
    const Tensor& in = value(x);
    Tensor gx(in.shape);
    // output value is recomputed cheaply where the rule needs it
    for (size_t i = 0; i < in.data.size(); ++i) gx.data[i] = g.data[i] * dfdx(in.data[i], 0.0);
    sink.add(x, gx);
  });
}

NodeId Tape::relu(NodeId x) {
  // subgradient at 0 is 0
  return unary_pointwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

NodeId Tape::sigmoid(NodeId x) {
  return unary_pointwise(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double v, double) {
        double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      });
}

NodeId Tape::exp(NodeId x) {
  return unary_pointwise(
      x, [](double v) { return std::exp(v); },
      [](double v, double) { return std::exp(v); });
}

NodeId Tape::binary_pointwise(NodeId a, NodeId b, const char* name, int sign_b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!same_shape(ta, tb))
    throw std::invalid_argument(std::string(name) + ": shape mismatch " + shape_str(ta.shape) +
                                " vs " + shape_str(tb.shape));
  Tensor out(ta.shape);
  for (size_t i = 0; i < ta.data.size(); ++i)
    out.data[i] = ta.data[i] + sign_b * tb.data[i];
  return push(std::move(out), {a, b}, [a, b, sign_b](const Tensor& g, GradSink& sink) {
    sink.add(a, g);
    if (sign_b == 1) {
      sink.add(b, g);
    } else {
      Tensor gb(g.shape);
      for (size_t i = 0; i < g.data.size(); ++i) gb.data[i] = -g.data[i];
      sink.add(b, gb);
    }
  });
}

NodeId Tape::add(NodeId a, NodeId b) { return binary_pointwise(a, b, "add", 1); }
NodeId Tape::sub(NodeId a, NodeId b) { return binary_pointwise(a, b, "sub", -1); }

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!same_shape(ta, tb))
    throw std::invalid_argument("mul: shape mismatch " + shape_str(ta.shape) + " vs " +
                                shape_str(tb.shape));
  Tensor out(ta.shape);
  for (size_t i = 0; i < ta.data.size(); ++i) out.data[i] = ta.data[i] * tb.data[i];
  return push(std::move(out), {a, b}, [this, a, b](const Tensor& g, GradSink& sink) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    Tensor ga(ta.shape), gb(tb.shape);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] = g.data[i] * tb.data[i];
      gb.data[i] = g.data[i] * ta.data[i];
    }
    sink.add(a, ga);
    sink.add(b, gb);
  });
}

NodeId Tape::scale(NodeId x, double c) {
  const Tensor& in = value(x);
  Tensor out(in.shape);
  for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = c * in.data[i];
  return push(std::move(out), {x}, [x, c](const Tensor& g, GradSink& sink) {
    Tensor gx(g.shape);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] = c * g.data[i];
    sink.add(x, gx);
  });
}

NodeId Tape::reshape(NodeId x, Shape target) {
  const Tensor& in = value(x);
  if (numel_of(target) != in.numel())
    throw std::invalid_argument("reshape: element count mismatch, " + shape_str(in.shape) +
                                " -> " + shape_str(target));
  Tensor out = in;
  out.shape = target;
  Shape orig = in.shape;
  return push(std::move(out), {x}, [x, orig](const Tensor& g, GradSink& sink) {
    Tensor gx = g;
    gx.shape = orig;
    sink.add(x, gx);
  });
}

NodeId Tape::flatten(NodeId x) {
  const Tensor& in = value(x);
  if (in.rank() < 1) throw std::invalid_argument("flatten: rank-0 tensor");
  int64_t n = in.dim(0);
  int64_t rest = n == 0 ? 0 : in.numel() / n;
  return reshape(x, {n, rest});
}

NodeId Tape::sum(NodeId x) {
  const Tensor& in = value(x);
  double acc = 0.0;
  for (double v : in.data) acc += v;
  return push(Tensor::scalar(acc), {x}, [this, x](const Tensor& g, GradSink& sink) {
    const double gs = g.scalar_value();
    sink.add(x, Tensor::full(value(x).shape, gs));
  });
}

NodeId Tape::mean(NodeId x) {
  const Tensor& in = value(x);
  if (in.numel() == 0) throw std::invalid_argument("mean of empty tensor");
  double acc = 0.0;
  for (double v : in.data) acc += v;
  const double inv_n = 1.0 / static_cast<double>(in.numel());
  return push(Tensor::scalar(acc * inv_n), {x},
              [this, x, inv_n](const Tensor& g, GradSink& sink) {
                sink.add(x, Tensor::full(value(x).shape, g.scalar_value() * inv_n));
              });
}

NodeId Tape::custom(Tensor value, std::vector<NodeId> parents,
                    std::function<void(const Tensor&, GradSink&)> bwd) {
  return push(std::move(value), std::move(parents), std::move(bwd));
}

GradMap Tape::backward(NodeId loss, const std::vector<NodeId>& params) const {
  const Node& ln = node(loss);
  if (!ln.value.is_scalar())
    throw std::invalid_argument("backward: loss node must be scalar, got shape " +
                                shape_str(ln.value.shape));
  for (NodeId p : params) node(p);  // validates ids

  GradSink sink(nodes_.size());
  sink.add(loss, Tensor::scalar(1.0));
  for (NodeId id = loss; id >= 0; --id) {
    const Node& nd = nodes_[static_cast<size_t>(id)];
    if (!nd.backward || !sink.live(id)) continue;
    nd.backward(sink.grad(id), sink);
  }

  GradMap out;
  for (NodeId p : params) {
    if (sink.live(p))
      out[p] = sink.grad(p);
    else
      out[p] = Tensor(node(p).value.shape);  // parameter unused by the loss
  }
  return out;
}

}  // namespace laae
