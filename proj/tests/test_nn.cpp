#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "laae/gradcheck.hpp"
#include "laae/losses.hpp"
#include "laae/nn.hpp"
#include "laae/rng.hpp"

using namespace laae;

namespace {

Tensor random_image_batch(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(0.0, 1.0);
  return t;
}

}  // namespace

TEST_CASE("init is byte-identical for a fixed seed") {
  CAEConfig cfg;
  ParameterSet a = init_cae_params(cfg, 123);
  ParameterSet b = init_cae_params(cfg, 123);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].value.data == b[i].value.data);
  }
  ParameterSet c = init_cae_params(cfg, 124);
  CHECK(a[0].value.data != c[0].value.data);
}

TEST_CASE("biases are exactly zero after init") {
  for (const auto& p : init_cvae_params(CVAEConfig{}, 7))
    if (p.name.ends_with(".b"))
      for (double v : p.value.data) CHECK(v == 0.0);
}

TEST_CASE("dense init bound is sqrt(1/fan_in)") {
  VanillaAEConfig cfg;
  cfg.input_dim = 100;
  cfg.hidden_dim = 10;
  ParameterSet ps = init_vanilla_params(cfg, 9);
  for (double v : ps.at("enc_fc.w").value.data) {
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
}

TEST_CASE("CAE maps (N,3,64,64) to itself with outputs in (0,1)") {
  CAEConfig cfg;
  ParameterSet ps = init_cae_params(cfg, 1);
  Rng rng(2);
  Tensor x = random_image_batch({4, 3, 64, 64}, rng);
  Tape tape;
  auto pids = push_params(tape, ps);
  NodeId out = cae_forward(tape, cfg, ps, pids, tape.leaf(x));
  const Tensor& y = tape.value(out);
  CHECK(y.shape == Shape{4, 3, 64, 64});
  for (double v : y.data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("CAE bottleneck flattens to 8192 with a 128-wide latent") {
  CAEConfig cfg;
  CHECK(cfg.bottleneck_h() == 8);
  CHECK(cfg.bottleneck_w() == 8);
  CHECK(cfg.flat_dim() == 8192);
  CHECK(init_cae_params(cfg, 0).at("enc_fc.w").value.shape == Shape{8192, 128});
}

TEST_CASE("CAE rejects wrong input shape") {
  CAEConfig cfg;
  ParameterSet ps = init_cae_params(cfg, 1);
  Tape tape;
  auto pids = push_params(tape, ps);
  NodeId x = tape.leaf(Tensor({1, 3, 32, 32}));
  CHECK_THROWS_AS(cae_forward(tape, cfg, ps, pids, x), std::invalid_argument);
}

TEST_CASE("CVAE encode yields (N,64) stats; decode restores (N,3,32,32)") {
  CVAEConfig cfg;
  CHECK(cfg.flat_dim() == 4096);
  ParameterSet ps = init_cvae_params(cfg, 3);
  Rng rng(4);
  Tensor x = random_image_batch({8, 3, 32, 32}, rng);
  Tape tape;
  auto pids = push_params(tape, ps);
  LatentStats stats = cvae_encode(tape, cfg, ps, pids, tape.leaf(x));
  CHECK(tape.value(stats.mu).shape == Shape{8, 64});
  CHECK(tape.value(stats.logvar).shape == Shape{8, 64});
  CHECK(tape.value(stats.mu).all_finite());
  CHECK(tape.value(stats.logvar).all_finite());

  NodeId z = reparameterize(tape, stats, tape.leaf(Tensor({8, 64})));
  NodeId out = cvae_decode(tape, cfg, ps, pids, z);
  CHECK(tape.value(out).shape == Shape{8, 3, 32, 32});
  for (double v : tape.value(out).data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("mu and logvar heads have independent weights") {
  CVAEConfig cfg;
  ParameterSet ps = init_cvae_params(cfg, 5);
  Rng rng(6);
  Tensor x = random_image_batch({2, 3, 32, 32}, rng);

  auto logvar_of = [&](const ParameterSet& params) {
    Tape tape;
    auto pids = push_params(tape, params);
    return tape.value(cvae_encode(tape, cfg, params, pids, tape.leaf(x)).logvar).data;
  };
  auto before = logvar_of(ps);
  for (double& v : ps.at("mu_fc.w").value.data) v += 0.37;
  CHECK(logvar_of(ps) == before);
}

TEST_CASE("reparameterize closed forms") {
  Tensor mu({2, 3});
  for (int64_t i = 0; i < 6; ++i) mu[i] = 0.1 * static_cast<double>(i) - 0.2;

  Tape tape;
  LatentStats stats{tape.leaf(mu), tape.leaf(Tensor({2, 3}))};

  // eps = 0 -> z = mu
  NodeId z0 = reparameterize(tape, stats, tape.leaf(Tensor({2, 3})));
  CHECK(tape.value(z0).data == mu.data);

  // logvar = 0, eps = 1 -> z = mu + 1
  NodeId z1 = reparameterize(tape, stats, tape.leaf(Tensor::full({2, 3}, 1.0)));
  for (int64_t i = 0; i < 6; ++i)
    CHECK(tape.value(z1)[i] == doctest::Approx(mu[i] + 1.0).epsilon(1e-12));

  // logvar = 2 ln 3, eps = e -> z = mu + 3e
  LatentStats wide{tape.leaf(mu), tape.leaf(Tensor::full({2, 3}, 2.0 * std::log(3.0)))};
  NodeId z3 = reparameterize(tape, wide, tape.leaf(Tensor::full({2, 3}, M_E)));
  for (int64_t i = 0; i < 6; ++i)
    CHECK(tape.value(z3)[i] == doctest::Approx(mu[i] + 3.0 * M_E).epsilon(1e-12));

  // shape mismatch
  CHECK_THROWS_AS(reparameterize(tape, stats, tape.leaf(Tensor({3, 2}))), std::invalid_argument);
}

TEST_CASE("reparameterization gradients: dz/dmu = 1, dz/dlogvar = 0.5 sigma eps") {
  Rng rng(8);
  Tensor mu({2, 4}), logvar({2, 4}), eps({2, 4});
  for (double& v : mu.data) v = rng.uniform(-1, 1);
  for (double& v : logvar.data) v = rng.uniform(-1, 1);
  for (double& v : eps.data) v = rng.normal();

  Tape tape;
  NodeId mi = tape.leaf(mu), li = tape.leaf(logvar), ei = tape.leaf(eps);
  NodeId z = reparameterize(tape, {mi, li}, ei);
  GradMap g = tape.backward(tape.sum(z), {mi, li});
  for (int64_t i = 0; i < mu.numel(); ++i) {
    CHECK(g.at(mi)[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.at(li)[i] ==
          doctest::Approx(0.5 * std::exp(0.5 * logvar[i]) * eps[i]).epsilon(1e-12));
  }
}

TEST_CASE("vanilla AE shape contract and sigmoid range") {
  VanillaAEConfig cfg;
  cfg.input_dim = 16;
  cfg.hidden_dim = 4;
  ParameterSet ps = init_vanilla_params(cfg, 11);
  Rng rng(12);
  Tensor x = random_image_batch({3, 16}, rng);
  Tape tape;
  auto pids = push_params(tape, ps);
  const Tensor& y = tape.value(vanilla_ae_forward(tape, cfg, ps, pids, tape.leaf(x)));
  CHECK(y.shape == Shape{3, 16});
  for (double v : y.data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("vanilla AE requires a compressing bottleneck") {
  VanillaAEConfig cfg;
  cfg.input_dim = 8;
  cfg.hidden_dim = 8;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("init + forward is bit-identical across runs") {
  auto run = [] {
    CVAEConfig cfg;
    ParameterSet ps = init_cvae_params(cfg, 77);
    Rng rng(78);
    Tensor x = random_image_batch({2, 3, 32, 32}, rng);
    Tape tape;
    auto pids = push_params(tape, ps);
    LatentStats stats = cvae_encode(tape, cfg, ps, pids, tape.leaf(x));
    NodeId z = reparameterize(tape, stats, tape.leaf(Tensor({2, 64})));
    return tape.value(cvae_decode(tape, cfg, ps, pids, z)).data;
  };
  CHECK(run() == run());
}

TEST_CASE("finite differences pass through the full CAE loss on sampled parameters") {
  // Desk-size variant of the canonical stack; same code path, feasible cost.
  CAEConfig cfg;
  cfg.in_h = cfg.in_w = 16;
  cfg.encoder = {{3, 4, 4, 2, 1}, {4, 6, 4, 2, 1}};
  cfg.latent_dim = 10;
  ParameterSet ps = init_cae_params(cfg, 21);
  Rng rng(22);
  Tensor x = random_image_batch({2, 3, 16, 16}, rng);

  auto loss_of = [&](const ParameterSet& params) {
    Tape tape;
    auto pids = push_params(tape, params);
    NodeId out = cae_forward(tape, cfg, params, pids, tape.leaf(x));
    return tape.value(mse(tape, out, tape.leaf(x))).scalar_value();
  };

  Tape tape;
  auto pids = push_params(tape, ps);
  NodeId out = cae_forward(tape, cfg, ps, pids, tape.leaf(x));
  NodeId loss = mse(tape, out, tape.leaf(x));
  GradMap grads = tape.backward(loss, pids);

  const double h = 1e-5;
  for (int pick = 0; pick < 10; ++pick) {
    const size_t pi = static_cast<size_t>(rng.below(ps.size()));
    auto& param = ps[pi];
    const size_t ei = static_cast<size_t>(rng.below(static_cast<uint64_t>(param.value.numel())));
    const double orig = param.value.data[ei];
    param.value.data[ei] = orig + h;
    const double fp = loss_of(ps);
    param.value.data[ei] = orig - h;
    const double fm = loss_of(ps);
    param.value.data[ei] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = grads.at(pids[pi]).data[ei];
    INFO(param.name, "[", ei, "]: analytic ", analytic, " numeric ", numeric);
    CHECK(std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)) < 1e-3);
  }
}
