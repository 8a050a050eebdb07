#include "laae/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace laae {

NodeId mse(Tape& tape, NodeId recon, NodeId target) {
  const Tensor& r = tape.value(recon);
  const Tensor& t = tape.value(target);
  if (!same_shape(r, t))
    throw std::invalid_argument("mse: shape mismatch " + shape_str(r.shape) + " vs " +
                                shape_str(t.shape));
  NodeId d = tape.sub(recon, target);
  return tape.mean(tape.mul(d, d));
}

NodeId bce(Tape& tape, NodeId recon, NodeId target) {
  const Tensor& p = tape.value(recon);
  const Tensor& t = tape.value(target);
  if (!same_shape(p, t))
    throw std::invalid_argument("bce: shape mismatch " + shape_str(p.shape) + " vs " +
                                shape_str(t.shape));
  if (p.rank() < 1 || p.dim(0) < 1) throw std::invalid_argument("bce: empty batch");
  const int64_t batch = p.dim(0);

  double acc = 0.0;
  for (size_t i = 0; i < p.data.size(); ++i) {
    const double pc = std::clamp(p.data[i], kBceClamp, 1.0 - kBceClamp);
    acc -= t.data[i] * std::log(pc) + (1.0 - t.data[i]) * std::log(1.0 - pc);
  }
  acc /= static_cast<double>(batch);

  return tape.custom(Tensor::scalar(acc), {recon, target},
                     [&tape, recon, target, batch](const Tensor& g, GradSink& sink) {
                       const Tensor& p = tape.value(recon);
                       const Tensor& t = tape.value(target);
                       const double gs = g.scalar_value() / static_cast<double>(batch);
                       Tensor gp(p.shape), gt(t.shape);
                       for (size_t i = 0; i < p.data.size(); ++i) {
                         const double pc = std::clamp(p.data[i], kBceClamp, 1.0 - kBceClamp);
                         // clamped regions are flat in p
                         const bool inside = p.data[i] > kBceClamp && p.data[i] < 1.0 - kBceClamp;
                         gp.data[i] = inside ? gs * (pc - t.data[i]) / (pc * (1.0 - pc)) : 0.0;
                         gt.data[i] = gs * (std::log(1.0 - pc) - std::log(pc));
                       }
                       sink.add(recon, gp);
                       sink.add(target, gt);
                     });
}

NodeId kl_gauss(Tape& tape, const LatentStats& stats) {
  const Tensor& mu = tape.value(stats.mu);
  const Tensor& lv = tape.value(stats.logvar);
  if (!same_shape(mu, lv))
    throw std::invalid_argument("kl_gauss: mu shape " + shape_str(mu.shape) +
                                " vs logvar shape " + shape_str(lv.shape));
  if (!mu.all_finite() || !lv.all_finite())
    throw std::invalid_argument("kl_gauss: non-finite latent statistics");
  if (mu.rank() < 1 || mu.dim(0) < 1) throw std::invalid_argument("kl_gauss: empty batch");
  const int64_t batch = mu.dim(0);

  // -0.5/N * sum(1 + logvar - mu^2 - exp(logvar))
  NodeId ones = tape.leaf(Tensor::full(mu.shape, 1.0));
  NodeId inner = tape.sub(tape.sub(tape.add(ones, stats.logvar), tape.mul(stats.mu, stats.mu)),
                          tape.exp(stats.logvar));
  return tape.scale(tape.sum(inner), -0.5 / static_cast<double>(batch));
}

LossValue cvae_loss(Tape& tape, NodeId recon, NodeId target, const LatentStats& stats,
                    double beta) {
  if (beta < 0.0) throw std::invalid_argument("cvae_loss: beta must be >= 0");
  NodeId b = bce(tape, recon, target);
  NodeId k = kl_gauss(tape, stats);
  LossValue out;
  out.bce = tape.value(b).scalar_value();
  out.kl = beta * tape.value(k).scalar_value();
  out.total = tape.add(b, tape.scale(k, beta));
  return out;
}

}  // namespace laae
