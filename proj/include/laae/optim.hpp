#pragma once

#include <memory>
#include <string>
#include <vector>

#include "laae/nn.hpp"

namespace laae {

// Applies one update from params[i].grad to params[i].value. State is lazily
// sized to the parameter set on the first step and owned by one thread.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParameterSet& params) = 0;
  virtual std::string describe() const = 0;
};

struct SgdOptions {
  double lr = 1e-3;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct LookaheadOptions {
  int64_t k = 5;       // sync period
  double alpha = 0.5;  // slow-weight interpolation, in (0, 1]
};

class Sgd : public Optimizer {
 public:
  explicit Sgd(SgdOptions opt);
  void step(ParameterSet& params) override;
  std::string describe() const override;

 private:
  SgdOptions opt_;
};

class Adam : public Optimizer {
 public:
  explicit Adam(AdamOptions opt);
  void step(ParameterSet& params) override;
  std::string describe() const override;

 private:
  AdamOptions opt_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

// k fast steps with the wrapped optimizer, then slow weights move toward the
// fast weights by alpha and the fast weights reset to them. Inner optimizer
// state persists across syncs.
class Lookahead : public Optimizer {
 public:
  Lookahead(std::unique_ptr<Optimizer> inner, LookaheadOptions opt);
  void step(ParameterSet& params) override;
  std::string describe() const override;

 private:
  std::unique_ptr<Optimizer> inner_;
  LookaheadOptions opt_;
  std::vector<Tensor> slow_;
  int64_t inner_steps_ = 0;
};

// spec is one of "sgd", "adam", "lookahead(adam)", "lookahead(sgd)".
std::unique_ptr<Optimizer> make_optimizer(const std::string& spec, const SgdOptions& sgd,
                                          const AdamOptions& adam, const LookaheadOptions& la);
std::unique_ptr<Optimizer> make_optimizer(const std::string& spec);

}  // namespace laae
