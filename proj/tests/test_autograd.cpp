#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "laae/gradcheck.hpp"
#include "laae/rng.hpp"
#include "laae/tape.hpp"

using namespace laae;

TEST_CASE("elementwise closed forms") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({4}, {0.0, -2.5, 3.0, 1.0}));
  CHECK(tape.value(tape.sigmoid(x))[0] == doctest::Approx(0.5));
  const Tensor& r = tape.value(tape.relu(x));
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 3.0);
}

TEST_CASE("reshape preserves row-major order") {
  Tape tape;
  Tensor t({2, 3, 4});
  for (int64_t i = 0; i < 24; ++i) t[i] = static_cast<double>(i);
  NodeId x = tape.leaf(t);
  const Tensor& out = tape.value(tape.reshape(x, {6, 4}));
  CHECK(out.shape == Shape{6, 4});
  for (int64_t i = 0; i < 24; ++i) CHECK(out[i] == static_cast<double>(i));
}

TEST_CASE("reshape rejects element-count mismatch") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({2, 3}));
  CHECK_THROWS_AS(tape.reshape(x, {7}), std::invalid_argument);
}

TEST_CASE("binary ops reject shape mismatch") {
  Tape tape;
  NodeId a = tape.leaf(Tensor({2, 3}));
  NodeId b = tape.leaf(Tensor({3, 2}));
  CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tape.mul(a, b), std::invalid_argument);
}

TEST_CASE("reductions") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({3}, {1.0, 2.0, 3.0}));
  CHECK(tape.value(tape.sum(x)).scalar_value() == 6.0);
  NodeId c = tape.leaf(Tensor::full({2, 2}, 0.75));
  CHECK(tape.value(tape.mean(c)).scalar_value() == doctest::Approx(0.75));
  NodeId half = tape.leaf(Tensor({2, 2}, {0.0, 0.0, 1.0, 1.0}));
  CHECK(tape.value(tape.mean(half)).scalar_value() == doctest::Approx(0.5));
  NodeId empty = tape.leaf(Tensor({0}));
  CHECK_THROWS_AS(tape.mean(empty), std::invalid_argument);
}

TEST_CASE("backward of sum is all-ones") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  NodeId loss = tape.sum(x);
  GradMap g = tape.backward(loss, {x});
  for (double v : g.at(x).data) CHECK(v == 1.0);
}

TEST_CASE("backward of mean of squares is 2x/n") {
  Tape tape;
  Tensor t({4}, {0.5, -1.0, 2.0, 0.25});
  NodeId x = tape.leaf(t);
  NodeId loss = tape.mean(tape.mul(x, x));
  GradMap g = tape.backward(loss, {x});
  for (int64_t i = 0; i < 4; ++i)
    CHECK(g.at(x)[i] == doctest::Approx(2.0 * t[i] / 4.0));
}

TEST_CASE("backward rejects non-scalar loss and dangling ids") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({2, 2}));
  CHECK_THROWS_AS(tape.backward(x, {x}), std::invalid_argument);
  NodeId s = tape.sum(x);
  CHECK_THROWS_AS(tape.backward(s, {999}), std::invalid_argument);
}

TEST_CASE("gradients sum over parameter reuse") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({2}, {3.0, -1.0}));
  // loss = sum(x + x) -> d/dx = 2
  NodeId loss = tape.sum(tape.add(x, x));
  GradMap g = tape.backward(loss, {x});
  CHECK(g.at(x)[0] == 2.0);
  CHECK(g.at(x)[1] == 2.0);
}

TEST_CASE("parameter unused by the loss gets a zero gradient") {
  Tape tape;
  NodeId x = tape.leaf(Tensor({2}, {1.0, 2.0}));
  NodeId unused = tape.leaf(Tensor({3}, {1.0, 1.0, 1.0}));
  GradMap g = tape.backward(tape.sum(x), {x, unused});
  CHECK(g.at(unused).shape == Shape{3});
  for (double v : g.at(unused).data) CHECK(v == 0.0);
}

TEST_CASE("full finite-difference suite passes at 1e-4") {
  const auto report = run_gradcheck(42, 1e-4);
  CHECK(report.results.size() == 16);
  for (const auto& r : report.results) {
    INFO(r.op, " max rel err ", r.max_rel_err);
    CHECK(r.pass);
  }
}

TEST_CASE("gradcheck flags a corrupted backward rule") {
  // sigmoid forward with a wrong derivative, as a negative control
  GraphBuilder build = [](Tape& tape, const std::vector<NodeId>& leaves) {
    const Tensor& in = tape.value(leaves[0]);
    Tensor out(in.shape);
    for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-in.data[i]));
    NodeId bad = tape.custom(std::move(out), {leaves[0]},
                             [&tape, x = leaves[0]](const Tensor& g, GradSink& sink) {
                               Tensor gx(g.shape);
                               for (size_t i = 0; i < g.data.size(); ++i)
                                 gx.data[i] = g.data[i] * 0.9;  // deliberately wrong
                               sink.add(x, gx);
                             });
    return tape.sum(bad);
  };
  Rng rng(1);
  Tensor in({2, 3});
  for (double& v : in.data) v = rng.uniform(-2.0, 2.0);
  CHECK(gradcheck_max_rel_error(build, {in}) > 1e-2);
}

TEST_CASE("backward is bit-deterministic across runs") {
  auto run = [] {
    Rng rng(99);
    Tensor x({2, 3, 6, 6}), w({4, 3, 3, 3}), b({4});
    for (double& v : x.data) v = rng.uniform(-1, 1);
    for (double& v : w.data) v = rng.uniform(-1, 1);
    Tape tape;
    NodeId xi = tape.leaf(x), wi = tape.leaf(w), bi = tape.leaf(b);
    NodeId loss = tape.mean(tape.sigmoid(tape.conv2d(xi, wi, bi, 2, 1)));
    GradMap g = tape.backward(loss, {wi, bi});
    return std::make_pair(g.at(wi).data, g.at(bi).data);
  };
  CHECK(run() == run());
}
