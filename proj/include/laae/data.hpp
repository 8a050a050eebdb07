#pragma once

#include <string>
#include <vector>

#include "laae/tensor.hpp"

namespace laae {

// Images all share one (H, W); values in [0, 1].
struct ImageDataset {
  std::vector<Tensor> images;  // each (3, H, W)
  std::string source;

  size_t size() const { return images.size(); }
  int64_t height() const { return images.at(0).dim(1); }
  int64_t width() const { return images.at(0).dim(2); }
};

// CIFAR-100 binary: 3074-byte records of coarse label, fine label, then
// 1024 R + 1024 G + 1024 B bytes (row-major 32x32). Labels are discarded.
ImageDataset load_cifar100(const std::string& path);

// Lexicographically ordered directory of binary P6 PPMs, maxval 255.
ImageDataset load_ppm_dir(const std::string& path);

Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);  // (3,H,W) in [0,1]

// 2x2 box-filter average per channel; H and W must be even.
Tensor resize_half(const Tensor& image);

// Seeded stand-in for a natural-movie dataset: smooth gradients plus
// oriented Gabor patches, 128x128x3, clipped to [0, 1].
ImageDataset synth_movie(int64_t n, uint64_t seed);

struct BatchPlan {
  uint64_t seed = 0;
  int64_t batch_size = 64;
};

// Fisher-Yates permutation keyed on (seed, epoch); the final short batch is
// kept. Identical plan -> identical batch sequence.
std::vector<Tensor> batches(const ImageDataset& dataset, const BatchPlan& plan, int64_t epoch);
std::vector<int64_t> epoch_permutation(size_t n, uint64_t seed, int64_t epoch);

}  // namespace laae
