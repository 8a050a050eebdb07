#include "laae/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "laae/rng.hpp"

namespace laae {

void ParameterSet::add(std::string name, Tensor value) {
  if (has(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Tensor grad(value.shape);
  params_.push_back(Param{std::move(name), std::move(value), std::move(grad)});
}

Param& ParameterSet::at(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw std::invalid_argument("no parameter named " + name);
}

const Param& ParameterSet::at(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw std::invalid_argument("no parameter named " + name);
}

bool ParameterSet::has(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

void ParameterSet::zero_grads() {
  for (auto& p : params_)
    for (double& g : p.grad.data) g = 0.0;
}

namespace {

int64_t stage_out(int64_t in, const ConvStage& s) {
  return conv_out_dim(in, s.kernel, s.stride, s.padding);
}

void validate_encoder(const std::vector<ConvStage>& encoder, int64_t in_ch, int64_t h, int64_t w) {
  if (encoder.empty()) throw std::invalid_argument("encoder must have at least one stage");
  int64_t ch = in_ch;
  for (const auto& s : encoder) {
    if (s.in_ch != ch)
      throw std::invalid_argument("encoder stage input channels " + std::to_string(s.in_ch) +
                                  " do not chain from " + std::to_string(ch));
    h = stage_out(h, s);
    w = stage_out(w, s);
    if (h <= 0 || w <= 0) throw std::invalid_argument("encoder stage collapses spatial dims");
    // the mirrored decoder must restore the input exactly
    int64_t back = conv_transpose_out_dim(h, s.kernel, s.stride, s.padding);
    (void)back;
    ch = s.out_ch;
  }
}

Tensor uniform_init(Shape shape, int64_t fan_in, Rng& rng) {
  const double b = std::sqrt(1.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(-b, b);
  return t;
}

// Decoder mirrors the encoder: stage i of the decoder transposes encoder
// stage (n-1-i), swapping in/out channels.
std::vector<ConvStage> mirrored_decoder(const std::vector<ConvStage>& encoder) {
  std::vector<ConvStage> dec;
  for (auto it = encoder.rbegin(); it != encoder.rend(); ++it)
    dec.push_back(ConvStage{it->out_ch, it->in_ch, it->kernel, it->stride, it->padding});
  return dec;
}

void add_conv_params(ParameterSet& ps, const std::string& prefix, const ConvStage& s,
                     bool transposed, Rng& rng) {
  const int64_t fan_in = s.in_ch * s.kernel * s.kernel;
  Shape wshape = transposed ? Shape{s.in_ch, s.out_ch, s.kernel, s.kernel}
                            : Shape{s.out_ch, s.in_ch, s.kernel, s.kernel};
  ps.add(prefix + ".w", uniform_init(std::move(wshape), fan_in, rng));
  ps.add(prefix + ".b", Tensor({s.out_ch}));
}

void add_dense_params(ParameterSet& ps, const std::string& prefix, int64_t din, int64_t dout,
                      Rng& rng) {
  ps.add(prefix + ".w", uniform_init({din, dout}, din, rng));
  ps.add(prefix + ".b", Tensor({dout}));
}

size_t index_of(const ParameterSet& params, const std::string& name) {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].name == name) return i;
  throw std::invalid_argument("no parameter named " + name);
}

}  // namespace

void CAEConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be positive");
  validate_encoder(encoder, in_ch, in_h, in_w);
}

int64_t CAEConfig::bottleneck_h() const {
  int64_t h = in_h;
  for (const auto& s : encoder) h = stage_out(h, s);
  return h;
}

int64_t CAEConfig::bottleneck_w() const {
  int64_t w = in_w;
  for (const auto& s : encoder) w = stage_out(w, s);
  return w;
}

int64_t CAEConfig::flat_dim() const {
  return encoder.back().out_ch * bottleneck_h() * bottleneck_w();
}

void CVAEConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be positive");
  validate_encoder(encoder, in_ch, in_h, in_w);
}

int64_t CVAEConfig::bottleneck_h() const {
  int64_t h = in_h;
  for (const auto& s : encoder) h = stage_out(h, s);
  return h;
}

int64_t CVAEConfig::bottleneck_w() const {
  int64_t w = in_w;
  for (const auto& s : encoder) w = stage_out(w, s);
  return w;
}

int64_t CVAEConfig::flat_dim() const {
  return encoder.back().out_ch * bottleneck_h() * bottleneck_w();
}

void VanillaAEConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be positive");
  if (hidden_dim < 1 || hidden_dim >= input_dim)
    throw std::invalid_argument("hidden_dim must be in [1, input_dim): got " +
                                std::to_string(hidden_dim) + " for input_dim " +
                                std::to_string(input_dim));
}

ParameterSet init_cae_params(const CAEConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParameterSet ps;
  for (size_t i = 0; i < cfg.encoder.size(); ++i)
    add_conv_params(ps, "enc" + std::to_string(i), cfg.encoder[i], false, rng);
  add_dense_params(ps, "enc_fc", cfg.flat_dim(), cfg.latent_dim, rng);
  add_dense_params(ps, "dec_fc", cfg.latent_dim, cfg.flat_dim(), rng);
  auto dec = mirrored_decoder(cfg.encoder);
  for (size_t i = 0; i < dec.size(); ++i)
    add_conv_params(ps, "dec" + std::to_string(i), dec[i], true, rng);
  return ps;
}

ParameterSet init_cvae_params(const CVAEConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParameterSet ps;
  for (size_t i = 0; i < cfg.encoder.size(); ++i)
    add_conv_params(ps, "enc" + std::to_string(i), cfg.encoder[i], false, rng);
  add_dense_params(ps, "mu_fc", cfg.flat_dim(), cfg.latent_dim, rng);
  add_dense_params(ps, "logvar_fc", cfg.flat_dim(), cfg.latent_dim, rng);
  add_dense_params(ps, "dec_fc", cfg.latent_dim, cfg.flat_dim(), rng);
  auto dec = mirrored_decoder(cfg.encoder);
  for (size_t i = 0; i < dec.size(); ++i)
    add_conv_params(ps, "dec" + std::to_string(i), dec[i], true, rng);
  return ps;
}

ParameterSet init_vanilla_params(const VanillaAEConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParameterSet ps;
  add_dense_params(ps, "enc_fc", cfg.input_dim, cfg.hidden_dim, rng);
  add_dense_params(ps, "dec_fc", cfg.hidden_dim, cfg.input_dim, rng);
  return ps;
}

std::vector<NodeId> push_params(Tape& tape, const ParameterSet& params) {
  std::vector<NodeId> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.leaf(p.value));
  return ids;
}

namespace {

NodeId pid(const ParameterSet& params, const std::vector<NodeId>& pids, const std::string& name) {
  return pids.at(index_of(params, name));
}

}  // namespace

NodeId cae_forward(Tape& tape, const CAEConfig& cfg, const ParameterSet& params,
                   const std::vector<NodeId>& pids, NodeId x) {
  const Tensor& in = tape.value(x);
  if (in.rank() != 4 || in.dim(1) != cfg.in_ch || in.dim(2) != cfg.in_h || in.dim(3) != cfg.in_w)
    throw std::invalid_argument("cae_forward: expected (N," + std::to_string(cfg.in_ch) + "," +
                                std::to_string(cfg.in_h) + "," + std::to_string(cfg.in_w) +
                                "), got " + shape_str(in.shape));
  const int64_t n = in.dim(0);

  NodeId h = x;
  for (size_t i = 0; i < cfg.encoder.size(); ++i) {
    const auto& s = cfg.encoder[i];
    const std::string name = "enc" + std::to_string(i);
    h = tape.conv2d(h, pid(params, pids, name + ".w"), pid(params, pids, name + ".b"),
                    s.stride, s.padding);
    h = tape.relu(h);
  }
  h = tape.flatten(h);
  NodeId latent = tape.dense(h, pid(params, pids, "enc_fc.w"), pid(params, pids, "enc_fc.b"));

  h = tape.dense(latent, pid(params, pids, "dec_fc.w"), pid(params, pids, "dec_fc.b"));
  h = tape.reshape(h, {n, cfg.encoder.back().out_ch, cfg.bottleneck_h(), cfg.bottleneck_w()});
  auto dec = mirrored_decoder(cfg.encoder);
  for (size_t i = 0; i < dec.size(); ++i) {
    const auto& s = dec[i];
    const std::string name = "dec" + std::to_string(i);
    h = tape.conv_transpose2d(h, pid(params, pids, name + ".w"), pid(params, pids, name + ".b"),
                              s.stride, s.padding);
    h = (i + 1 == dec.size()) ? tape.sigmoid(h) : tape.relu(h);
  }
  return h;
}

LatentStats cvae_encode(Tape& tape, const CVAEConfig& cfg, const ParameterSet& params,
                        const std::vector<NodeId>& pids, NodeId x) {
  const Tensor& in = tape.value(x);
  if (in.rank() != 4 || in.dim(1) != cfg.in_ch || in.dim(2) != cfg.in_h || in.dim(3) != cfg.in_w)
    throw std::invalid_argument("cvae_encode: expected (N," + std::to_string(cfg.in_ch) + "," +
                                std::to_string(cfg.in_h) + "," + std::to_string(cfg.in_w) +
                                "), got " + shape_str(in.shape));
  NodeId h = x;
  for (size_t i = 0; i < cfg.encoder.size(); ++i) {
    const auto& s = cfg.encoder[i];
    const std::string name = "enc" + std::to_string(i);
    h = tape.conv2d(h, pid(params, pids, name + ".w"), pid(params, pids, name + ".b"),
                    s.stride, s.padding);
    h = tape.relu(h);
  }
  h = tape.flatten(h);
  LatentStats stats;
  stats.mu = tape.dense(h, pid(params, pids, "mu_fc.w"), pid(params, pids, "mu_fc.b"));
  stats.logvar = tape.dense(h, pid(params, pids, "logvar_fc.w"), pid(params, pids, "logvar_fc.b"));
  return stats;
}

NodeId reparameterize(Tape& tape, const LatentStats& stats, NodeId eps) {
  const Tensor& mu = tape.value(stats.mu);
  const Tensor& e = tape.value(eps);
  if (!same_shape(mu, e))
    throw std::invalid_argument("reparameterize: eps shape " + shape_str(e.shape) +
                                " does not match latent shape " + shape_str(mu.shape));
  // z = mu + exp(0.5 * logvar) * eps
  NodeId sigma = tape.exp(tape.scale(stats.logvar, 0.5));
  return tape.add(stats.mu, tape.mul(sigma, eps));
}

NodeId cvae_decode(Tape& tape, const CVAEConfig& cfg, const ParameterSet& params,
                   const std::vector<NodeId>& pids, NodeId z) {
  const Tensor& zt = tape.value(z);
  if (zt.rank() != 2 || zt.dim(1) != cfg.latent_dim)
    throw std::invalid_argument("cvae_decode: expected (N," + std::to_string(cfg.latent_dim) +
                                "), got " + shape_str(zt.shape));
  const int64_t n = zt.dim(0);
  NodeId h = tape.dense(z, pid(params, pids, "dec_fc.w"), pid(params, pids, "dec_fc.b"));
  h = tape.reshape(h, {n, cfg.encoder.back().out_ch, cfg.bottleneck_h(), cfg.bottleneck_w()});
  auto dec = mirrored_decoder(cfg.encoder);
  for (size_t i = 0; i < dec.size(); ++i) {
    const auto& s = dec[i];
    const std::string name = "dec" + std::to_string(i);
    h = tape.conv_transpose2d(h, pid(params, pids, name + ".w"), pid(params, pids, name + ".b"),
                              s.stride, s.padding);
    h = (i + 1 == dec.size()) ? tape.sigmoid(h) : tape.relu(h);
  }
  return h;
}

NodeId vanilla_ae_forward(Tape& tape, const VanillaAEConfig& cfg, const ParameterSet& params,
                          const std::vector<NodeId>& pids, NodeId x) {
  const Tensor& in = tape.value(x);
  if (in.rank() != 2 || in.dim(1) != cfg.input_dim)
    throw std::invalid_argument("vanilla_ae_forward: expected (N," +
                                std::to_string(cfg.input_dim) + "), got " + shape_str(in.shape));
  NodeId h = tape.dense(x, pid(params, pids, "enc_fc.w"), pid(params, pids, "enc_fc.b"));
  h = tape.relu(h);
  h = tape.dense(h, pid(params, pids, "dec_fc.w"), pid(params, pids, "dec_fc.b"));
  return tape.sigmoid(h);
}

}  // namespace laae
