#pragma once

#include <functional>
#include <string>
#include <vector>

#include "laae/tape.hpp"

namespace laae {

// Builds a scalar loss from leaves already on the tape, in leaf order.
using GraphBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>& leaves)>;

// Central finite differences (step h) against the tape's analytic gradients
// over every element of every input. Relative error is measured against
// max(1, |analytic|).
double gradcheck_max_rel_error(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                               double h = 1e-5);

struct GradCheckResult {
  std::string op;
  double max_rel_err;
  bool pass;
};

struct GradCheckReport {
  std::vector<GradCheckResult> results;
  bool all_pass;
};

// Every registered differentiable op, checked on seeded random tensors with
// dims <= (2,3,8,8).
GradCheckReport run_gradcheck(uint64_t seed = 42, double tol = 1e-4);

}  // namespace laae
