#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "laae/gradcheck.hpp"
#include "laae/train.hpp"

namespace {

// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 I/O or format error.
constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value pairs collected from flags
};

void add_config_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "flat key=value config file");
  auto collect = [&opts](const std::string& key) {
    return [&opts, key](const std::string& v) { opts.overrides.push_back(key + "=" + v); };
  };
  cmd->add_option_function<std::string>("--model", collect("model"),
                                        "model kind: cae, cvae, vanilla");
  cmd->add_option_function<std::string>("--optimizer", collect("optimizer"),
                                        "sgd, adam, lookahead(adam), lookahead(sgd)");
  cmd->add_option_function<std::string>("--epochs", collect("epochs"), "training epochs");
  cmd->add_option_function<std::string>("--seed", collect("seed"), "PRNG seed");
  cmd->add_option_function<std::string>("--data", collect("data"),
                                        "dataset kind: synth, cifar100, ppm");
  cmd->add_option_function<std::string>("--data-path", collect("data_path"),
                                        "dataset file or directory");
  cmd->add_option_function<std::string>("--data-count", collect("data_count"),
                                        "synthetic image count");
  cmd->add_option_function<std::string>("--batch-size", collect("batch_size"), "batch size");
  cmd->add_option_function<std::string>("--beta", collect("beta"), "CVAE KL weight");
  cmd->add_option_function<std::string>("--eval-every", collect("eval_every"),
                                        "validation logging period in epochs (0 = off)");
  cmd->add_option_function<std::string>("--out", collect("out"), "output directory");
}

laae::ExperimentConfig resolve_config(const CommonOpts& opts) {
  laae::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = laae::ExperimentConfig::from_file(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int run_gradcheck_cmd() {
  const auto report = laae::run_gradcheck();
  for (const auto& r : report.results)
    std::printf("%-18s max rel err %.3e  %s\n", r.op.c_str(), r.max_rel_err,
                r.pass ? "pass" : "FAIL");
  if (!report.all_pass) {
    std::fprintf(stderr, "gradcheck: FAILED\n");
    return kExitVerification;
  }
  std::printf("gradcheck: all %zu ops pass\n", report.results.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional (variational) autoencoder training harness comparing "
               "Adam against Lookahead-wrapped Adam"};
  app.require_subcommand(1);

  CommonOpts train_opts, cmp_a_opts, cmp_b_opts, recon_opts;

  auto* train_cmd = app.add_subcommand("train", "train one model and emit loss.csv + model.ckpt");
  add_config_flags(train_cmd, train_opts);

  auto* cmp_cmd = app.add_subcommand(
      "compare", "matched-seed A/B run of two optimizer arms on one model and dataset");
  add_config_flags(cmp_cmd, cmp_a_opts);
  std::string optimizer_b = "lookahead(adam)";
  std::string cmp_out = "compare_run";
  cmp_cmd->add_option("--optimizer-b", optimizer_b, "optimizer spec of arm B");
  cmp_cmd->add_option("--compare-out", cmp_out, "directory for compare.csv/compare.svg");

  auto* recon_cmd = app.add_subcommand(
      "reconstruct", "emit an actual-vs-reconstructed PPM grid from a checkpoint");
  add_config_flags(recon_cmd, recon_opts);
  std::string ckpt_path;
  std::string grid_out = "recon.ppm";
  int64_t count = 5;
  recon_cmd->add_option("--checkpoint", ckpt_path, "model.ckpt path")->required();
  recon_cmd->add_option("--count", count, "number of images in the grid");
  recon_cmd->add_option("--grid-out", grid_out, "output PPM path");

  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "finite-difference verification of every differentiable op");
  (void)grad_cmd;

  CLI11_PARSE(app, argc, argv);

  try {
    if (grad_cmd->parsed()) return run_gradcheck_cmd();
    if (train_cmd->parsed()) {
      laae::train(resolve_config(train_opts));
      return kExitOk;
    }
    if (cmp_cmd->parsed()) {
      laae::ExperimentConfig a = resolve_config(cmp_a_opts);
      laae::ExperimentConfig b = a;
      b.optimizer = optimizer_b;
      laae::compare(a, b, cmp_out);
      return kExitOk;
    }
    if (recon_cmd->parsed()) {
      laae::ExperimentConfig cfg = resolve_config(recon_opts);
      laae::reconstruct(ckpt_path, cfg, count, grid_out);
      std::cout << "wrote " << grid_out << "\n";
      return kExitOk;
    }
  } catch (const laae::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const laae::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return kExitOk;
}
