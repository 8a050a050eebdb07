#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "laae/data.hpp"
#include "laae/nn.hpp"
#include "laae/optim.hpp"

namespace laae {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full declarative description of one training run. Serializes losslessly to
// the flat key=value format; every run writes its resolved form next to its
// outputs.
struct ExperimentConfig {
  std::string model = "cae";       // cae | cvae | vanilla
  std::string data = "synth";      // synth | cifar100 | ppm
  std::string data_path;           // cifar100 / ppm
  int64_t data_count = 256;        // synth
  std::string optimizer = "adam";  // sgd | adam | lookahead(adam) | lookahead(sgd)
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int64_t lookahead_k = 5;
  double lookahead_alpha = 0.5;
  int64_t epochs = 50;
  int64_t batch_size = 64;
  uint64_t seed = 1;
  double beta = 1.0;  // CVAE KL weight
  int64_t vanilla_hidden = 64;
  int64_t eval_every = 0;  // 0 disables validation logging
  std::string val_data;    // dataset kind for validation, when eval_every > 0
  std::string val_path;
  std::string out = "run";

  static ExperimentConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  std::string to_string() const;  // sorted key=value lines
  void validate() const;
};

struct LossRow {
  int64_t epoch;
  int64_t step;
  double total;
  std::optional<double> bce;
  std::optional<double> kl;
};

struct TrainResult {
  std::vector<LossRow> log;
  std::vector<double> epoch_means;  // mean of total per epoch, index 0 = epoch 1
  std::string checkpoint_path;
};

// ---- checkpoint ("LAAE" container) ---------------------------------------

struct Checkpoint {
  std::string model_kind;
  uint64_t config_hash;
  ParameterSet params;
};

uint64_t fnv1a64(const std::string& s);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// ---- runs ----------------------------------------------------------------

// Runs the configured training and writes resolved.config, loss.csv, and
// model.ckpt into cfg.out.
TrainResult train(const ExperimentConfig& cfg);

struct CompareResult {
  std::vector<double> epoch_means_a, epoch_means_b;
  std::string verdict;  // "A", "B", or "tie"
};

// A/B experiment: arms must differ only in optimizer settings and share the
// seed, so both start from identical weights and see identical batches.
// Writes compare.csv and compare.svg into `out`, arm outputs into
// out/armA and out/armB.
CompareResult compare(const ExperimentConfig& a, const ExperimentConfig& b,
                      const std::string& out);

// Writes a PPM grid of the first k dataset images (top) and their
// reconstructions (bottom), separated by 2-pixel black rules.
void reconstruct(const std::string& checkpoint_path, const ExperimentConfig& cfg, int64_t k,
                 const std::string& out_path);

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);
void write_compare_csv(const std::string& path, const std::vector<double>& a,
                       const std::vector<double>& b);
void write_compare_svg(const std::string& path, const std::vector<double>& a,
                       const std::vector<double>& b, const std::string& label_a,
                       const std::string& label_b);

// Loads the configured dataset and resizes by factor 2 when the images are
// exactly twice the model's expected input size.
ImageDataset load_dataset_for(const ExperimentConfig& cfg, const std::string& kind,
                              const std::string& path);

// Canonical architecture description; hashed into checkpoints.
std::string model_arch_string(const ExperimentConfig& cfg);

}  // namespace laae
