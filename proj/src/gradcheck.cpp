#include "laae/gradcheck.hpp"

#include <cmath>

#include "laae/losses.hpp"
#include "laae/rng.hpp"

namespace laae {

double gradcheck_max_rel_error(const GraphBuilder& build, const std::vector<Tensor>& inputs,
                               double h) {
  auto eval = [&](const std::vector<Tensor>& in) {
    Tape tape;
    std::vector<NodeId> leaves;
    for (const auto& t : in) leaves.push_back(tape.leaf(t));
    return tape.value(build(tape, leaves)).scalar_value();
  };

  // analytic gradients
  Tape tape;
  std::vector<NodeId> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  NodeId loss = build(tape, leaves);
  GradMap grads = tape.backward(loss, leaves);

  double max_rel = 0.0;
  std::vector<Tensor> work = inputs;
  for (size_t li = 0; li < work.size(); ++li) {
    const Tensor& analytic = grads.at(leaves[li]);
    for (size_t i = 0; i < work[li].data.size(); ++i) {
      const double orig = work[li].data[i];
      work[li].data[i] = orig + h;
      const double fp = eval(work);
      work[li].data[i] = orig - h;
      const double fm = eval(work);
      work[li].data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic.data[i];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// values bounded away from the relu kink so h=1e-5 never crosses it
Tensor random_away_from_zero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

struct Check {
  std::string op;
  std::vector<Tensor> inputs;
  GraphBuilder build;
};

std::vector<Check> build_checks(uint64_t seed) {
  Rng rng(seed);
  std::vector<Check> checks;

  checks.push_back({"conv2d",
                    {random_tensor({2, 3, 8, 8}, rng), random_tensor({2, 3, 3, 3}, rng),
                     random_tensor({2}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.sum(t.conv2d(l[0], l[1], l[2], 2, 1));
                    }});
  checks.push_back({"conv_transpose2d",
                    {random_tensor({2, 3, 4, 4}, rng), random_tensor({3, 2, 3, 3}, rng),
                     random_tensor({2}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.sum(t.conv_transpose2d(l[0], l[1], l[2], 2, 1));
                    }});
  checks.push_back({"dense",
                    {random_tensor({2, 6}, rng), random_tensor({6, 4}, rng),
                     random_tensor({4}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.sum(t.dense(l[0], l[1], l[2]));
                    }});
  checks.push_back({"relu",
                    {random_away_from_zero({2, 3, 4, 4}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) { return t.sum(t.relu(l[0])); }});
  checks.push_back({"sigmoid",
                    {random_tensor({2, 3, 4, 4}, rng, -3.0, 3.0)},
                    [](Tape& t, const std::vector<NodeId>& l) { return t.sum(t.sigmoid(l[0])); }});
  checks.push_back({"exp",
                    {random_tensor({2, 3, 4, 4}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) { return t.sum(t.exp(l[0])); }});
  checks.push_back({"add",
                    {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      // squared so both arguments get non-constant gradients
                      NodeId s = t.add(l[0], l[1]);
                      return t.sum(t.mul(s, s));
                    }});
  checks.push_back({"sub",
                    {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      NodeId s = t.sub(l[0], l[1]);
                      return t.sum(t.mul(s, s));
                    }});
  checks.push_back({"mul",
                    {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.sum(t.mul(l[0], l[1]));
                    }});
  checks.push_back({"scale",
                    {random_tensor({2, 5}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      NodeId s = t.scale(l[0], -2.5);
                      return t.sum(t.mul(s, s));
                    }});
  checks.push_back({"sum",
                    {random_tensor({2, 3, 4}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.sum(t.mul(l[0], l[0]));
                    }});
  checks.push_back({"mean",
                    {random_tensor({2, 3, 4}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return t.mean(t.mul(l[0], l[0]));
                    }});
  checks.push_back({"mse",
                    {random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0),
                     random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0)},
                    [](Tape& t, const std::vector<NodeId>& l) { return mse(t, l[0], l[1]); }});
  checks.push_back({"bce",
                    {random_tensor({2, 3, 4, 4}, rng, 0.05, 0.95),
                     random_tensor({2, 3, 4, 4}, rng, 0.0, 1.0)},
                    [](Tape& t, const std::vector<NodeId>& l) { return bce(t, l[0], l[1]); }});
  checks.push_back({"kl_gauss",
                    {random_tensor({2, 6}, rng), random_tensor({2, 6}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      return kl_gauss(t, LatentStats{l[0], l[1]});
                    }});
  checks.push_back({"reparameterize",
                    {random_tensor({2, 6}, rng), random_tensor({2, 6}, rng),
                     random_tensor({2, 6}, rng)},
                    [](Tape& t, const std::vector<NodeId>& l) {
                      NodeId z = reparameterize(t, LatentStats{l[0], l[1]}, l[2]);
                      return t.sum(t.mul(z, z));
                    }});
  return checks;
}

}  // namespace

GradCheckReport run_gradcheck(uint64_t seed, double tol) {
  GradCheckReport report;
  report.all_pass = true;
  for (auto& check : build_checks(seed)) {
    const double err = gradcheck_max_rel_error(check.build, check.inputs);
    const bool pass = err < tol;
    report.results.push_back({check.op, err, pass});
    report.all_pass = report.all_pass && pass;
  }
  return report;
}

}  // namespace laae
