#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace laae {

using Shape = std::vector<int64_t>;

int64_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major tensor of 64-bit floats. Image tensors are NCHW.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s);
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, double v);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return shape.at(i); }
  size_t rank() const { return shape.size(); }
  bool is_scalar() const { return numel() == 1; }
  double scalar_value() const;
  bool all_finite() const;

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
};

bool same_shape(const Tensor& a, const Tensor& b);
void require_shape(const Tensor& t, const Shape& expected, const char* what);

// ---- forward kernels ------------------------------------------------------

// out[n,co,i,j] = bias[co] + sum_{ci,u,v} in[n,ci,i*s+u-p, j*s+v-p] * w[co,ci,u,v]
Tensor conv2d_fwd(const Tensor& input, const Tensor& weight, const Tensor& bias,
                  int64_t stride, int64_t padding);

// Adjoint of conv2d w.r.t. its input, plus a per-channel bias.
// weight layout is [Cin, Cout, kH, kW].
Tensor conv_transpose2d_fwd(const Tensor& input, const Tensor& weight,
                            const Tensor& bias, int64_t stride, int64_t padding);

// Bias-free adjoint core, used directly by the adjoint property tests.
Tensor conv_transpose2d_core(const Tensor& input, const Tensor& weight,
                             int64_t stride, int64_t padding);

Tensor dense_fwd(const Tensor& x, const Tensor& weight, const Tensor& bias);

// ---- backward kernels -----------------------------------------------------

void conv2d_bwd(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                int64_t stride, int64_t padding,
                Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias);

void conv_transpose2d_bwd(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out, int64_t stride, int64_t padding,
                          Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias);

void dense_bwd(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
               Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias);

// Shape formulas shared by kernels and model configs.
int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding);
int64_t conv_transpose_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding);

double dot(const Tensor& a, const Tensor& b);

}  // namespace laae
