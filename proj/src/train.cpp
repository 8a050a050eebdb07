#include "laae/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "laae/losses.hpp"
#include "laae/rng.hpp"

namespace laae {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_u64(uint64_t v) { return std::to_string(v); }

std::map<std::string, std::string> config_map(const ExperimentConfig& c) {
  std::map<std::string, std::string> m;
  m["model"] = c.model;
  m["data"] = c.data;
  m["data_path"] = c.data_path;
  m["data_count"] = std::to_string(c.data_count);
  m["optimizer"] = c.optimizer;
  m["lr"] = fmt_double(c.lr);
  m["adam_beta1"] = fmt_double(c.adam_beta1);
  m["adam_beta2"] = fmt_double(c.adam_beta2);
  m["adam_eps"] = fmt_double(c.adam_eps);
  m["lookahead_k"] = std::to_string(c.lookahead_k);
  m["lookahead_alpha"] = fmt_double(c.lookahead_alpha);
  m["epochs"] = std::to_string(c.epochs);
  m["batch_size"] = std::to_string(c.batch_size);
  m["seed"] = fmt_u64(c.seed);
  m["beta"] = fmt_double(c.beta);
  m["vanilla_hidden"] = std::to_string(c.vanilla_hidden);
  m["eval_every"] = std::to_string(c.eval_every);
  m["val_data"] = c.val_data;
  m["val_path"] = c.val_path;
  m["out"] = c.out;
  return m;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "model") model = value;
    else if (key == "data") data = value;
    else if (key == "data_path") data_path = value;
    else if (key == "data_count") data_count = std::stoll(value);
    else if (key == "optimizer") optimizer = value;
    else if (key == "lr") lr = std::stod(value);
    else if (key == "adam_beta1") adam_beta1 = std::stod(value);
    else if (key == "adam_beta2") adam_beta2 = std::stod(value);
    else if (key == "adam_eps") adam_eps = std::stod(value);
    else if (key == "lookahead_k") lookahead_k = std::stoll(value);
    else if (key == "lookahead_alpha") lookahead_alpha = std::stod(value);
    else if (key == "epochs") epochs = std::stoll(value);
    else if (key == "batch_size") batch_size = std::stoll(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "beta") beta = std::stod(value);
    else if (key == "vanilla_hidden") vanilla_hidden = std::stoll(value);
    else if (key == "eval_every") eval_every = std::stoll(value);
    else if (key == "val_data") val_data = value;
    else if (key == "val_path") val_path = value;
    else if (key == "out") out = value;
    else throw ConfigError("unknown config key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError("bad value '" + value + "' for config key '" + key + "'");
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      const auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string ExperimentConfig::to_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : config_map(*this)) os << k << "=" << v << "\n";
  return os.str();
}

void ExperimentConfig::validate() const {
  if (model != "cae" && model != "cvae" && model != "vanilla")
    throw ConfigError("model must be cae, cvae, or vanilla; got '" + model + "'");
  if (data != "synth" && data != "cifar100" && data != "ppm")
    throw ConfigError("data must be synth, cifar100, or ppm; got '" + data + "'");
  if ((data == "cifar100" || data == "ppm") && data_path.empty())
    throw ConfigError("data_path is required for data=" + data);
  if (data == "synth" && data_count < 1) throw ConfigError("data_count must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (beta < 0.0) throw ConfigError("beta must be >= 0");
  if (lr <= 0.0) throw ConfigError("lr must be > 0");
  if (lookahead_k < 1) throw ConfigError("lookahead_k must be >= 1");
  if (lookahead_alpha <= 0.0 || lookahead_alpha > 1.0)
    throw ConfigError("lookahead_alpha must lie in (0, 1]");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (eval_every > 0 && val_data.empty())
    throw ConfigError("eval_every > 0 requires val_data");
  if (out.empty()) throw ConfigError("out directory must be set");
  try {
    make_optimizer(optimizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---- checkpoint ----------------------------------------------------------

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[4] = {'L', 'A', 'A', 'E'};
constexpr uint32_t kCkptVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(buf, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& path, std::string bytes)
      : path_(path), bytes_(std::move(bytes)) {}

  uint32_t u32() { return static_cast<uint32_t>(raw(4)); }
  uint64_t u64() { return raw(8); }
  double f64() {
    const uint64_t bits = raw(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  uint64_t raw(size_t n) {
    need(n);
    uint64_t v = 0;
    for (size_t i = 0; i < n; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  void need(size_t n) {
    if (pos_ + n > bytes_.size())
      throw FormatError(path_ + ": truncated at offset " + std::to_string(pos_) + ", expected " +
                        std::to_string(n) + " more bytes of " + std::to_string(bytes_.size()));
  }
  std::string path_;
  std::string bytes_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kCkptVersion);
  put_u32(buf, static_cast<uint32_t>(ckpt.model_kind.size()));
  buf += ckpt.model_kind;
  put_u64(buf, ckpt.config_hash);
  put_u32(buf, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    put_u32(buf, static_cast<uint32_t>(p.name.size()));
    buf += p.name;
    put_u32(buf, static_cast<uint32_t>(p.value.rank()));
    for (int64_t d : p.value.shape) put_u64(buf, static_cast<uint64_t>(d));
    for (double v : p.value.data) put_f64(buf, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  ByteReader r(path, ss.str());

  if (r.str(4) != std::string(kMagic, 4))
    throw FormatError(path + ": bad magic, not a LAAE checkpoint");
  const uint32_t version = r.u32();
  if (version != kCkptVersion)
    throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.model_kind = r.str(r.u32());
  ckpt.config_hash = r.u64();
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    const uint32_t rank = r.u32();
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int64_t>(r.u64()));
    Tensor value(shape);
    for (double& v : value.data) v = r.f64();
    ckpt.params.add(name, std::move(value));
  }
  if (!r.done())
    throw FormatError(path + ": " + std::to_string(r.pos()) + " bytes parsed but file has trailing data");
  return ckpt;
}

// ---- dataset / model plumbing --------------------------------------------

std::string model_arch_string(const ExperimentConfig& cfg) {
  std::ostringstream os;
  if (cfg.model == "cae") {
    CAEConfig c;
    os << "cae:in=" << c.in_ch << "x" << c.in_h << "x" << c.in_w << ":latent=" << c.latent_dim;
    for (const auto& s : c.encoder)
      os << ":conv=" << s.in_ch << ">" << s.out_ch << ",k" << s.kernel << ",s" << s.stride
         << ",p" << s.padding;
  } else if (cfg.model == "cvae") {
    CVAEConfig c;
    os << "cvae:in=" << c.in_ch << "x" << c.in_h << "x" << c.in_w << ":latent=" << c.latent_dim;
    for (const auto& s : c.encoder)
      os << ":conv=" << s.in_ch << ">" << s.out_ch << ",k" << s.kernel << ",s" << s.stride
         << ",p" << s.padding;
  } else {
    os << "vanilla:hidden=" << cfg.vanilla_hidden;
  }
  return os.str();
}

namespace {

std::pair<int64_t, int64_t> expected_hw(const std::string& model) {
  if (model == "cae") return {64, 64};
  if (model == "cvae") return {32, 32};
  return {0, 0};  // vanilla accepts any size
}

}  // namespace

ImageDataset load_dataset_for(const ExperimentConfig& cfg, const std::string& kind,
                              const std::string& path) {
  ImageDataset ds;
  if (kind == "synth") {
    ds = synth_movie(cfg.data_count, cfg.seed);
  } else if (kind == "cifar100") {
    ds = load_cifar100(path);
  } else if (kind == "ppm") {
    ds = load_ppm_dir(path);
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  const auto [eh, ew] = expected_hw(cfg.model);
  if (eh == 0) return ds;
  while (ds.height() == 2 * eh && ds.width() == 2 * ew) {
    for (auto& img : ds.images) img = resize_half(img);
  }
  if (ds.height() != eh || ds.width() != ew)
    throw ConfigError("model " + cfg.model + " expects " + std::to_string(eh) + "x" +
                      std::to_string(ew) + " images; dataset '" + ds.source + "' has " +
                      std::to_string(ds.height()) + "x" + std::to_string(ds.width()));
  return ds;
}

namespace {

// One training run's model state: parameters plus forward/loss builders for
// the configured kind.
struct ModelRt {
  std::string kind;
  CAEConfig cae;
  CVAEConfig cvae;
  VanillaAEConfig van;
  ParameterSet params;

  static ModelRt make(const ExperimentConfig& cfg, const ImageDataset& ds) {
    ModelRt m;
    m.kind = cfg.model;
    if (m.kind == "cae") {
      m.params = init_cae_params(m.cae, cfg.seed);
    } else if (m.kind == "cvae") {
      m.params = init_cvae_params(m.cvae, cfg.seed);
    } else {
      m.van.input_dim = 3 * ds.height() * ds.width();
      m.van.hidden_dim = cfg.vanilla_hidden;
      m.params = init_vanilla_params(m.van, cfg.seed);
    }
    return m;
  }

  // Builds the training loss for one batch. eps_rng supplies the CVAE noise;
  // nullptr selects the deterministic mean path (eps = 0).
  LossRow loss_for_batch(Tape& tape, const std::vector<NodeId>& pids, const Tensor& batch,
                         double beta, Rng* eps_rng, NodeId* loss_node) const {
    LossRow row{0, 0, 0.0, std::nullopt, std::nullopt};
    NodeId x = tape.leaf(batch);
    if (kind == "cae") {
      NodeId recon = cae_forward(tape, cae, params, pids, x);
      *loss_node = mse(tape, recon, x);
    } else if (kind == "cvae") {
      LatentStats stats = cvae_encode(tape, cvae, params, pids, x);
      Tensor eps({batch.dim(0), cvae.latent_dim});
      if (eps_rng)
        for (double& v : eps.data) v = eps_rng->normal();
      NodeId z = reparameterize(tape, stats, tape.leaf(std::move(eps)));
      NodeId recon = cvae_decode(tape, cvae, params, pids, z);
      LossValue lv = cvae_loss(tape, recon, x, stats, beta);
      *loss_node = lv.total;
      row.bce = lv.bce;
      row.kl = lv.kl;
    } else {
      NodeId flat = tape.flatten(x);
      NodeId recon = vanilla_ae_forward(tape, van, params, pids, flat);
      *loss_node = mse(tape, recon, flat);
    }
    row.total = tape.value(*loss_node).scalar_value();
    return row;
  }

  // Deterministic reconstruction (CVAE takes the latent mean).
  Tensor reconstruct_batch(const Tensor& batch, double /*beta*/) const {
    Tape tape;
    auto pids = push_params(tape, params);
    NodeId x = tape.leaf(batch);
    if (kind == "cae") return tape.value(cae_forward(tape, cae, params, pids, x));
    if (kind == "cvae") {
      LatentStats stats = cvae_encode(tape, cvae, params, pids, x);
      NodeId z = reparameterize(tape, stats,
                                tape.leaf(Tensor({batch.dim(0), cvae.latent_dim})));
      return tape.value(cvae_decode(tape, cvae, params, pids, z));
    }
    NodeId flat = tape.flatten(x);
    Tensor out = tape.value(vanilla_ae_forward(tape, van, params, pids, flat));
    out.shape = batch.shape;
    return out;
  }
};

constexpr uint64_t kEpsStreamSalt = 0x5eed00eb57a11ULL;

}  // namespace

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,step,loss_total,loss_bce,loss_kl\n";
  for (const auto& r : rows) {
    f << r.epoch << "," << r.step << "," << fmt_double(r.total) << ","
      << (r.bce ? fmt_double(*r.bce) : "") << "," << (r.kl ? fmt_double(*r.kl) : "") << "\n";
  }
}

TrainResult train(const ExperimentConfig& cfg) {
  cfg.validate();
  ImageDataset ds = load_dataset_for(cfg, cfg.data, cfg.data_path);
  if (static_cast<int64_t>(ds.size()) < cfg.batch_size)
    throw ConfigError("batch_size " + std::to_string(cfg.batch_size) +
                      " exceeds dataset size " + std::to_string(ds.size()));
  ImageDataset val;
  if (cfg.eval_every > 0) val = load_dataset_for(cfg, cfg.val_data, cfg.val_path);

  ModelRt model = ModelRt::make(cfg, ds);
  auto opt = make_optimizer(cfg.optimizer, SgdOptions{cfg.lr},
                            AdamOptions{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps},
                            LookaheadOptions{cfg.lookahead_k, cfg.lookahead_alpha});
  Rng eps_rng(cfg.seed ^ kEpsStreamSalt);

  fs::create_directories(cfg.out);
  {
    std::ofstream f(cfg.out + "/resolved.config", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + cfg.out + "/resolved.config");
    f << cfg.to_string();
  }

  TrainResult result;
  std::vector<std::pair<int64_t, double>> eval_rows;
  BatchPlan plan{cfg.seed, cfg.batch_size};
  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_sum = 0.0;
    int64_t epoch_steps = 0;
    for (auto& batch : batches(ds, plan, epoch - 1)) {
      Tape tape;
      auto pids = push_params(tape, model.params);
      NodeId loss_node = 0;
      LossRow row = model.loss_for_batch(tape, pids, batch, cfg.beta,
                                         model.kind == "cvae" ? &eps_rng : nullptr, &loss_node);
      row.epoch = epoch;
      row.step = epoch_steps + 1;
      if (!std::isfinite(row.total))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", step " + std::to_string(row.step));
      GradMap grads = tape.backward(loss_node, pids);
      for (size_t i = 0; i < model.params.size(); ++i)
        model.params[i].grad = std::move(grads.at(pids[i]));
      opt->step(model.params);
      epoch_sum += row.total;
      epoch_steps += 1;
      result.log.push_back(row);
    }
    const double epoch_mean = epoch_sum / static_cast<double>(epoch_steps);
    result.epoch_means.push_back(epoch_mean);
    std::cout << "epoch " << epoch << "/" << cfg.epochs << " mean loss " << epoch_mean << "\n";

    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) {
      double val_sum = 0.0;
      int64_t val_steps = 0;
      BatchPlan val_plan{cfg.seed, std::min<int64_t>(cfg.batch_size,
                                                     static_cast<int64_t>(val.size()))};
      for (auto& batch : batches(val, val_plan, 0)) {
        Tape tape;
        auto pids = push_params(tape, model.params);
        NodeId loss_node = 0;
        LossRow row = model.loss_for_batch(tape, pids, batch, cfg.beta, nullptr, &loss_node);
        val_sum += row.total;
        val_steps += 1;
      }
      eval_rows.emplace_back(epoch, val_sum / static_cast<double>(val_steps));
    }
  }

  write_loss_csv(cfg.out + "/loss.csv", result.log);
  if (!eval_rows.empty()) {
    std::ofstream f(cfg.out + "/eval.csv", std::ios::binary);
    f << "epoch,val_loss\n";
    for (const auto& [e, v] : eval_rows) f << e << "," << fmt_double(v) << "\n";
  }
  Checkpoint ckpt{cfg.model, fnv1a64(model_arch_string(cfg)), std::move(model.params)};
  result.checkpoint_path = cfg.out + "/model.ckpt";
  save_checkpoint(result.checkpoint_path, ckpt);
  return result;
}

// ---- compare --------------------------------------------------------------

namespace {

const char* kOptimizerKeys[] = {"optimizer", "lr",          "adam_beta1",     "adam_beta2",
                                "adam_eps",  "lookahead_k", "lookahead_alpha", "out"};

std::map<std::string, std::string> masked(const ExperimentConfig& c) {
  auto m = config_map(c);
  for (const char* k : kOptimizerKeys) m.erase(k);
  return m;
}

}  // namespace

void write_compare_csv(const std::string& path, const std::vector<double>& a,
                       const std::vector<double>& b) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "epoch,mean_loss_A,mean_loss_B\n";
  for (size_t i = 0; i < a.size(); ++i)
    f << (i + 1) << "," << fmt_double(a[i]) << "," << fmt_double(b[i]) << "\n";
}

void write_compare_svg(const std::string& path, const std::vector<double>& a,
                       const std::vector<double>& b, const std::string& label_a,
                       const std::string& label_b) {
  const int width = 720, height = 440;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double lo = a[0], hi = a[0];
  for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
  for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
  if (hi == lo) hi = lo + 1.0;
  const size_t n = a.size();

  auto xs = [&](size_t i) {
    return n == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto ys = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };
  auto polyline = [&](const std::vector<double>& series, const char* color) {
    std::ostringstream os;
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < series.size(); ++i)
      os << xs(i) << "," << ys(series[i]) << (i + 1 < series.size() ? " " : "");
    os << "\"/>\n";
    return os.str();
  };

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
    << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "  <line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
    << mt + ph << "\" stroke=\"black\"/>\n"
    << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
    << "\" stroke=\"black\"/>\n"
    << "  <text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
    << "\" text-anchor=\"middle\" font-size=\"14\">epoch</text>\n"
    << "  <text x=\"18\" y=\"" << mt + ph / 2
    << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 " << mt + ph / 2
    << ")\">mean training loss</text>\n"
    << "  <text x=\"" << ml - 8 << "\" y=\"" << ys(hi) + 4
    << "\" text-anchor=\"end\" font-size=\"11\">" << hi << "</text>\n"
    << "  <text x=\"" << ml - 8 << "\" y=\"" << ys(lo) + 4
    << "\" text-anchor=\"end\" font-size=\"11\">" << lo << "</text>\n"
    << "  <text x=\"" << ml << "\" y=\"" << mt + ph + 18
    << "\" text-anchor=\"middle\" font-size=\"11\">1</text>\n"
    << "  <text x=\"" << ml + pw << "\" y=\"" << mt + ph + 18
    << "\" text-anchor=\"middle\" font-size=\"11\">" << n << "</text>\n"
    << polyline(a, "#1f6fd6") << polyline(b, "#d62728")
    << "  <text x=\"" << ml + pw - 10 << "\" y=\"" << mt + 16
    << "\" text-anchor=\"end\" font-size=\"13\" fill=\"#1f6fd6\">" << label_a << "</text>\n"
    << "  <text x=\"" << ml + pw - 10 << "\" y=\"" << mt + 34
    << "\" text-anchor=\"end\" font-size=\"13\" fill=\"#d62728\">" << label_b << "</text>\n"
    << "</svg>\n";
}

CompareResult compare(const ExperimentConfig& a_in, const ExperimentConfig& b_in,
                      const std::string& out) {
  a_in.validate();
  b_in.validate();
  if (masked(a_in) != masked(b_in))
    throw ConfigError("compare: configs must differ only in optimizer settings");

  ExperimentConfig a = a_in, b = b_in;
  a.out = out + "/armA";
  b.out = out + "/armB";
  fs::create_directories(out);

  TrainResult ra = train(a);
  TrainResult rb = train(b);

  // same init, same first batch: the first recorded loss precedes any update
  if (ra.log.at(0).total != rb.log.at(0).total)
    throw std::logic_error("compare: arms diverged before the first optimizer update");

  CompareResult result;
  result.epoch_means_a = ra.epoch_means;
  result.epoch_means_b = rb.epoch_means;
  const double fa = ra.epoch_means.back(), fb = rb.epoch_means.back();
  result.verdict = fa == fb ? "tie" : (fa < fb ? "A" : "B");

  write_compare_csv(out + "/compare.csv", ra.epoch_means, rb.epoch_means);
  write_compare_svg(out + "/compare.svg", ra.epoch_means, rb.epoch_means,
                    "A: " + a.optimizer, "B: " + b.optimizer);
  if (result.verdict == "tie")
    std::cout << "verdict: tie (both arms reached final epoch-mean loss " << fa << ")\n";
  else
    std::cout << "verdict: arm " << result.verdict << " ("
              << (result.verdict == "A" ? a.optimizer : b.optimizer)
              << ") achieved the lower final epoch-mean training loss ("
              << std::min(fa, fb) << " vs " << std::max(fa, fb) << ")\n";
  return result;
}

// ---- reconstruct -----------------------------------------------------------

void reconstruct(const std::string& checkpoint_path, const ExperimentConfig& cfg, int64_t k,
                 const std::string& out_path) {
  if (k < 1) throw ConfigError("reconstruct: count must be >= 1");
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (ckpt.model_kind != cfg.model)
    throw ConfigError("checkpoint holds a " + ckpt.model_kind + " model but config requests " +
                      cfg.model);
  if (ckpt.config_hash != fnv1a64(model_arch_string(cfg)))
    throw ConfigError("checkpoint config hash does not match the " + cfg.model +
                      " architecture in this build");

  ImageDataset ds = load_dataset_for(cfg, cfg.data, cfg.data_path);
  if (k > static_cast<int64_t>(ds.size()))
    throw ConfigError("reconstruct: requested " + std::to_string(k) + " images but dataset has " +
                      std::to_string(ds.size()));

  ModelRt model = ModelRt::make(cfg, ds);
  model.params = std::move(ckpt.params);

  const int64_t h = ds.height(), w = ds.width();
  Tensor batch({k, 3, h, w});
  double* dst = batch.data.data();
  for (int64_t i = 0; i < k; ++i) {
    const Tensor& img = ds.images[static_cast<size_t>(i)];
    std::copy(img.data.begin(), img.data.end(), dst);
    dst += img.numel();
  }
  Tensor recon = model.reconstruct_batch(batch, cfg.beta);

  // top row actual, bottom row reconstructed, 2px black separators
  const int64_t gw = k * w + (k - 1) * 2;
  const int64_t gh = 2 * h + 2;
  Tensor grid({3, gh, gw});
  for (int64_t i = 0; i < k; ++i) {
    const int64_t x0 = i * (w + 2);
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
          grid.data[static_cast<size_t>((c * gh + y) * gw + x0 + x)] =
              batch.data[static_cast<size_t>(((i * 3 + c) * h + y) * w + x)];
          grid.data[static_cast<size_t>((c * gh + h + 2 + y) * gw + x0 + x)] =
              recon.data[static_cast<size_t>(((i * 3 + c) * h + y) * w + x)];
        }
  }
  write_ppm(out_path, grid);
}

}  // namespace laae
