#include "laae/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "laae/rng.hpp"

namespace laae {

namespace {

constexpr int64_t kCifarRecord = 3074;
constexpr int64_t kCifarPlane = 1024;  // 32*32

std::ifstream open_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

}  // namespace

ImageDataset load_cifar100(const std::string& path) {
  std::ifstream f = open_binary(path);
  f.seekg(0, std::ios::end);
  const int64_t size = static_cast<int64_t>(f.tellg());
  f.seekg(0);
  if (size % kCifarRecord != 0)
    throw std::runtime_error(path + ": size " + std::to_string(size) +
                             " is not a multiple of the 3074-byte record; trailing " +
                             std::to_string(size % kCifarRecord) + " bytes at offset " +
                             std::to_string(size - size % kCifarRecord));
  const int64_t count = size / kCifarRecord;
  if (count == 0) throw std::runtime_error(path + ": empty dataset");

  ImageDataset ds;
  ds.source = "cifar100:" + path;
  ds.images.reserve(static_cast<size_t>(count));
  std::vector<unsigned char> rec(kCifarRecord);
  for (int64_t r = 0; r < count; ++r) {
    if (!f.read(reinterpret_cast<char*>(rec.data()), kCifarRecord))
      throw std::runtime_error(path + ": short read at record " + std::to_string(r));
    Tensor img({3, 32, 32});
    // bytes [2, 3074): R plane, G plane, B plane
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t p = 0; p < kCifarPlane; ++p)
        img.data[static_cast<size_t>(c * kCifarPlane + p)] =
            static_cast<double>(rec[static_cast<size_t>(2 + c * kCifarPlane + p)]) / 255.0;
    ds.images.push_back(std::move(img));
  }
  return ds;
}

namespace {

// Reads one whitespace-delimited ASCII token, skipping '#' comments.
std::string ppm_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw std::runtime_error(path + ": truncated PPM header");
  return tok;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream f = open_binary(path);
  char magic[2];
  if (!f.read(magic, 2) || magic[0] != 'P' || magic[1] != '6')
    throw std::runtime_error(path + ": not a binary P6 PPM");
  const int64_t w = std::stoll(ppm_token(f, path));
  const int64_t h = std::stoll(ppm_token(f, path));
  const int64_t maxval = std::stoll(ppm_token(f, path));
  if (w <= 0 || h <= 0) throw std::runtime_error(path + ": bad PPM dimensions");
  if (maxval != 255) throw std::runtime_error(path + ": only maxval 255 is supported, got " +
                                              std::to_string(maxval));
  std::vector<unsigned char> raw(static_cast<size_t>(3 * w * h));
  if (!f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw std::runtime_error(path + ": truncated PPM pixel data");

  Tensor img({3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        img.data[static_cast<size_t>((c * h + y) * w + x)] =
            static_cast<double>(raw[static_cast<size_t>((y * w + x) * 3 + c)]) / 255.0;
  return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("write_ppm expects a (3,H,W) tensor, got " +
                                shape_str(image.shape));
  const int64_t h = image.dim(1), w = image.dim(2);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> raw(static_cast<size_t>(3 * w * h));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        const double v = image.data[static_cast<size_t>((c * h + y) * w + x)];
        const double scaled = std::round(v * 255.0);
        raw[static_cast<size_t>((y * w + x) * 3 + c)] =
            static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
      }
  f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

ImageDataset load_ppm_dir(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw std::runtime_error(path + " is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error(path + ": no files to load");

  ImageDataset ds;
  ds.source = "ppm_dir:" + path;
  for (const auto& file : files) {
    Tensor img = read_ppm(file);
    if (!ds.images.empty() &&
        (img.dim(1) != ds.height() || img.dim(2) != ds.width()))
      throw std::runtime_error(file + ": dimensions " + shape_str(img.shape) +
                               " differ from earlier files");
    ds.images.push_back(std::move(img));
  }
  return ds;
}

Tensor resize_half(const Tensor& image) {
  if (image.rank() != 3) throw std::invalid_argument("resize_half expects (C,H,W)");
  const int64_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("resize_half requires even dimensions, got " +
                                shape_str(image.shape));
  Tensor out({c, h / 2, w / 2});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h / 2; ++y)
      for (int64_t x = 0; x < w / 2; ++x) {
        const auto src = [&](int64_t yy, int64_t xx) {
          return image.data[static_cast<size_t>((ch * h + yy) * w + xx)];
        };
        out.data[static_cast<size_t>((ch * (h / 2) + y) * (w / 2) + x)] =
            0.25 * (src(2 * y, 2 * x) + src(2 * y, 2 * x + 1) + src(2 * y + 1, 2 * x) +
                    src(2 * y + 1, 2 * x + 1));
      }
  return out;
}

ImageDataset synth_movie(int64_t n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_movie: n must be >= 1");
  constexpr int64_t H = 128, W = 128;
  Rng rng(seed);
  ImageDataset ds;
  ds.source = "synth:" + std::to_string(n) + ":" + std::to_string(seed);
  ds.images.reserve(static_cast<size_t>(n));
  for (int64_t img_i = 0; img_i < n; ++img_i) {
    Tensor img({3, H, W});
    // smooth per-channel gradient: offset + linear ramp + low-frequency wave
    double base[3], gx[3], gy[3], freq[3], phase[3];
    for (int c = 0; c < 3; ++c) {
      base[c] = rng.uniform(0.05, 0.35);
      gx[c] = rng.uniform(-0.5, 0.5);
      gy[c] = rng.uniform(-0.5, 0.5);
      freq[c] = rng.uniform(1.0, 3.0);
      phase[c] = rng.uniform(0.0, 2.0 * M_PI);
    }
    for (int c = 0; c < 3; ++c)
      for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
          const double fy = static_cast<double>(y) / H, fx = static_cast<double>(x) / W;
          img.data[static_cast<size_t>((c * H + y) * W + x)] =
              base[c] + gx[c] * (fx - 0.5) + gy[c] * (fy - 0.5) +
              0.15 * std::sin(2.0 * M_PI * freq[c] * (fx + fy) + phase[c]);
        }
    // oriented Gabor patches, shared across channels with per-channel gain
    const int patches = 3 + static_cast<int>(rng.below(4));
    for (int p = 0; p < patches; ++p) {
      const double cx = rng.uniform(0.15, 0.85) * W;
      const double cy = rng.uniform(0.15, 0.85) * H;
      const double sigma = rng.uniform(6.0, 18.0);
      const double theta = rng.uniform(0.0, M_PI);
      const double lambda = rng.uniform(8.0, 24.0);
      const double psi = rng.uniform(0.0, 2.0 * M_PI);
      const double gain[3] = {rng.uniform(-0.6, 0.9), rng.uniform(-0.6, 0.9),
                              rng.uniform(-0.6, 0.9)};
      const int64_t r = static_cast<int64_t>(3.0 * sigma);
      const int64_t y0 = std::max<int64_t>(0, static_cast<int64_t>(cy) - r);
      const int64_t y1 = std::min<int64_t>(H, static_cast<int64_t>(cy) + r);
      const int64_t x0 = std::max<int64_t>(0, static_cast<int64_t>(cx) - r);
      const int64_t x1 = std::min<int64_t>(W, static_cast<int64_t>(cx) + r);
      for (int64_t y = y0; y < y1; ++y)
        for (int64_t x = x0; x < x1; ++x) {
          const double dx = x - cx, dy = y - cy;
          const double xr = dx * std::cos(theta) + dy * std::sin(theta);
          const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          const double wave = std::cos(2.0 * M_PI * xr / lambda + psi);
          for (int c = 0; c < 3; ++c)
            img.data[static_cast<size_t>((c * H + y) * W + x)] += gain[c] * env * wave;
        }
    }
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::vector<int64_t> epoch_permutation(size_t n, uint64_t seed, int64_t epoch) {
  std::vector<int64_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = static_cast<int64_t>(i);
  Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(epoch + 1)));
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<Tensor> batches(const ImageDataset& dataset, const BatchPlan& plan, int64_t epoch) {
  const size_t n = dataset.size();
  if (n == 0) throw std::invalid_argument("batches: empty dataset");
  if (plan.batch_size < 1 || static_cast<size_t>(plan.batch_size) > n)
    throw std::invalid_argument("batches: batch_size " + std::to_string(plan.batch_size) +
                                " out of range for dataset of " + std::to_string(n));
  const auto perm = epoch_permutation(n, plan.seed, epoch);
  const int64_t h = dataset.height(), w = dataset.width();
  std::vector<Tensor> out;
  for (size_t start = 0; start < n; start += static_cast<size_t>(plan.batch_size)) {
    const size_t end = std::min(n, start + static_cast<size_t>(plan.batch_size));
    Tensor batch({static_cast<int64_t>(end - start), 3, h, w});
    double* dst = batch.data.data();
    for (size_t i = start; i < end; ++i) {
      const Tensor& img = dataset.images[static_cast<size_t>(perm[i])];
      std::copy(img.data.begin(), img.data.end(), dst);
      dst += img.numel();
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace laae
