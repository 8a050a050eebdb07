#pragma once

#include <string>
#include <vector>

#include "laae/tape.hpp"
#include "laae/tensor.hpp"

namespace laae {

// Named, ordered trainable tensors with matching gradient buffers. Iteration
// order is the construction order and is identical across runs for a given
// model config.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const;
  size_t size() const { return params_.size(); }
  Param& operator[](size_t i) { return params_[i]; }
  const Param& operator[](size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  void zero_grads();

 private:
  std::vector<Param> params_;
};

struct ConvStage {
  int64_t in_ch, out_ch, kernel, stride, padding;
};

struct CAEConfig {
  int64_t in_ch = 3, in_h = 64, in_w = 64;
  std::vector<ConvStage> encoder = {{3, 32, 4, 2, 1}, {32, 64, 4, 2, 1}, {64, 128, 4, 2, 1}};
  int64_t latent_dim = 128;
  void validate() const;
  // Spatial dims after the encoder stack, derived from the conv shape formula.
  int64_t bottleneck_h() const;
  int64_t bottleneck_w() const;
  int64_t flat_dim() const;  // channels * h * w at the bottleneck
};

struct CVAEConfig {
  int64_t in_ch = 3, in_h = 32, in_w = 32;
  std::vector<ConvStage> encoder = {{3, 32, 4, 2, 1}, {32, 64, 4, 2, 1}};
  int64_t latent_dim = 64;
  void validate() const;
  int64_t bottleneck_h() const;
  int64_t bottleneck_w() const;
  int64_t flat_dim() const;
};

struct VanillaAEConfig {
  int64_t input_dim = 16;
  int64_t hidden_dim = 4;  // must be < input_dim (compressed representation)
  void validate() const;
};

struct LatentStats {
  NodeId mu;
  NodeId logvar;
};

// Weights ~ Uniform(-b, b) with b = sqrt(1/fan_in); biases zero. The draw
// order is the parameter order, so a seed pins every byte.
ParameterSet init_cae_params(const CAEConfig& cfg, uint64_t seed);
ParameterSet init_cvae_params(const CVAEConfig& cfg, uint64_t seed);
ParameterSet init_vanilla_params(const VanillaAEConfig& cfg, uint64_t seed);

// Pushes every parameter onto the tape in order and returns the node ids,
// parallel to the ParameterSet.
std::vector<NodeId> push_params(Tape& tape, const ParameterSet& params);

// Forward passes. `pids` are the node ids from push_params on the same tape.
NodeId cae_forward(Tape& tape, const CAEConfig& cfg, const ParameterSet& params,
                   const std::vector<NodeId>& pids, NodeId x);
LatentStats cvae_encode(Tape& tape, const CVAEConfig& cfg, const ParameterSet& params,
                        const std::vector<NodeId>& pids, NodeId x);
NodeId reparameterize(Tape& tape, const LatentStats& stats, NodeId eps);
NodeId cvae_decode(Tape& tape, const CVAEConfig& cfg, const ParameterSet& params,
                   const std::vector<NodeId>& pids, NodeId z);
NodeId vanilla_ae_forward(Tape& tape, const VanillaAEConfig& cfg, const ParameterSet& params,
                          const std::vector<NodeId>& pids, NodeId x);

}  // namespace laae
