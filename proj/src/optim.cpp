#include "laae/optim.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace laae {

namespace {

void check_grads(const ParameterSet& params) {
  for (const auto& p : params) {
    if (!same_shape(p.grad, p.value))
      throw std::invalid_argument("gradient shape mismatch for parameter " + p.name);
    if (!p.grad.all_finite())
      throw std::invalid_argument("non-finite gradient for parameter " + p.name);
  }
}

}  // namespace

Sgd::Sgd(SgdOptions opt) : opt_(opt) {
  if (opt_.lr <= 0.0) throw std::invalid_argument("sgd: lr must be positive");
}

void Sgd::step(ParameterSet& params) {
  check_grads(params);
  for (auto& p : params)
    for (size_t i = 0; i < p.value.data.size(); ++i)
      p.value.data[i] -= opt_.lr * p.grad.data[i];
}

std::string Sgd::describe() const {
  std::ostringstream os;
  os << "sgd(lr=" << opt_.lr << ")";
  return os.str();
}

Adam::Adam(AdamOptions opt) : opt_(opt) {
  if (opt_.lr <= 0.0) throw std::invalid_argument("adam: lr must be positive");
  if (opt_.beta1 < 0.0 || opt_.beta1 >= 1.0 || opt_.beta2 < 0.0 || opt_.beta2 >= 1.0)
    throw std::invalid_argument("adam: betas must lie in [0, 1)");
}

void Adam::step(ParameterSet& params) {
  check_grads(params);
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value.shape);
      v_.emplace_back(p.value.shape);
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("adam: parameter count changed mid-run");

  t_ += 1;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i];
      m.data[i] = opt_.beta1 * m.data[i] + (1.0 - opt_.beta1) * g;
      v.data[i] = opt_.beta2 * v.data[i] + (1.0 - opt_.beta2) * g * g;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      p.value.data[i] -= opt_.lr * m_hat / (std::sqrt(v_hat) + opt_.eps_hat);
    }
  }
}

std::string Adam::describe() const {
  std::ostringstream os;
  os << "adam(lr=" << opt_.lr << ",beta1=" << opt_.beta1 << ",beta2=" << opt_.beta2
     << ",eps=" << opt_.eps_hat << ")";
  return os.str();
}

Lookahead::Lookahead(std::unique_ptr<Optimizer> inner, LookaheadOptions opt)
    : inner_(std::move(inner)), opt_(opt) {
  if (!inner_) throw std::invalid_argument("lookahead: missing inner optimizer");
  if (opt_.k < 1) throw std::invalid_argument("lookahead: k must be >= 1");
  if (opt_.alpha <= 0.0 || opt_.alpha > 1.0)
    throw std::invalid_argument("lookahead: alpha must lie in (0, 1]");
}

void Lookahead::step(ParameterSet& params) {
  if (slow_.empty())
    for (const auto& p : params) slow_.push_back(p.value);
  if (slow_.size() != params.size())
    throw std::invalid_argument("lookahead: parameter count changed mid-run");

  inner_->step(params);
  inner_steps_ += 1;
  if (inner_steps_ % opt_.k != 0) return;

  // phi <- (1-alpha)*phi + alpha*theta; theta <- phi. This form makes
  // alpha=1 an exact copy, so lookahead(k=1, alpha=1) is bitwise the inner
  // optimizer.
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& phi = slow_[pi];
    auto& theta = params[pi].value;
    for (size_t i = 0; i < phi.data.size(); ++i) {
      phi.data[i] = (1.0 - opt_.alpha) * phi.data[i] + opt_.alpha * theta.data[i];
      theta.data[i] = phi.data[i];
    }
  }
}

std::string Lookahead::describe() const {
  std::ostringstream os;
  os << "lookahead(" << inner_->describe() << ",k=" << opt_.k << ",alpha=" << opt_.alpha << ")";
  return os.str();
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& spec, const SgdOptions& sgd,
                                          const AdamOptions& adam, const LookaheadOptions& la) {
  if (spec == "sgd") return std::make_unique<Sgd>(sgd);
  if (spec == "adam") return std::make_unique<Adam>(adam);
  if (spec == "lookahead(adam)")
    return std::make_unique<Lookahead>(std::make_unique<Adam>(adam), la);
  if (spec == "lookahead(sgd)")
    return std::make_unique<Lookahead>(std::make_unique<Sgd>(sgd), la);
  throw std::invalid_argument("unknown optimizer spec '" + spec +
                              "'; valid specs: sgd, adam, lookahead(adam), lookahead(sgd)");
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& spec) {
  return make_optimizer(spec, SgdOptions{}, AdamOptions{}, LookaheadOptions{});
}

}  // namespace laae
