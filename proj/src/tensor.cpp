#include "laae/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace laae {

int64_t numel_of(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor::Tensor(Shape s) : shape(std::move(s)), data(static_cast<size_t>(numel_of(shape)), 0.0) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (numel_of(shape) != static_cast<int64_t>(data.size()))
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
}

Tensor Tensor::full(Shape s, double v) {
  Tensor t(std::move(s));
  for (double& x : t.data) x = v;
  return t;
}

double Tensor::scalar_value() const {
  if (!is_scalar()) throw std::invalid_argument("scalar_value on non-scalar tensor " + shape_str(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape != expected)
    throw std::invalid_argument(std::string(what) + ": expected shape " + shape_str(expected) +
                                ", got " + shape_str(t.shape));
}

int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding) {
  int64_t padded = in + 2 * padding;
  if (padded < k)
    throw std::invalid_argument("kernel size " + std::to_string(k) + " exceeds padded input " +
                                std::to_string(padded));
  return (padded - k) / stride + 1;
}

int64_t conv_transpose_out_dim(int64_t in, int64_t k, int64_t stride, int64_t padding) {
  int64_t out = (in - 1) * stride - 2 * padding + k;
  if (out <= 0)
    throw std::invalid_argument("transposed convolution output dimension is non-positive (" +
                                std::to_string(out) + ")");
  return out;
}

namespace {

void check_conv_args(const Tensor& input, const Tensor& weight, const Tensor& bias,
                     int64_t stride, int64_t padding, bool transposed) {
  if (input.rank() != 4)
    throw std::invalid_argument("conv input must be rank 4, got " + shape_str(input.shape));
  if (weight.rank() != 4)
    throw std::invalid_argument("conv weight must be rank 4, got " + shape_str(weight.shape));
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("padding must be >= 0");
  int64_t cin_w = transposed ? weight.dim(0) : weight.dim(1);
  int64_t cout = transposed ? weight.dim(1) : weight.dim(0);
  if (input.dim(1) != cin_w)
    throw std::invalid_argument("channel mismatch: input has " + std::to_string(input.dim(1)) +
                                " channels, weight expects " + std::to_string(cin_w));
  if (bias.numel() != 0 && (bias.rank() != 1 || bias.dim(0) != cout))
    throw std::invalid_argument("bias shape " + shape_str(bias.shape) + " does not match " +
                                std::to_string(cout) + " output channels");
}

}  // namespace

Tensor conv2d_fwd(const Tensor& input, const Tensor& weight, const Tensor& bias,
                  int64_t stride, int64_t padding) {
  check_conv_args(input, weight, bias, stride, padding, false);
  const int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t Cout = weight.dim(0), kH = weight.dim(2), kW = weight.dim(3);
  const int64_t Hout = conv_out_dim(H, kH, stride, padding);
  const int64_t Wout = conv_out_dim(W, kW, stride, padding);

  Tensor out({N, Cout, Hout, Wout});
  const double* in = input.data.data();
  const double* w = weight.data.data();
  double* o = out.data.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Cout; ++co) {
      const double b = bias.numel() ? bias[co] : 0.0;
      for (int64_t i = 0; i < Hout; ++i)
        for (int64_t j = 0; j < Wout; ++j) {
          double acc = b;
          for (int64_t ci = 0; ci < Cin; ++ci)
            for (int64_t u = 0; u < kH; ++u) {
              const int64_t y = i * stride + u - padding;
              if (y < 0 || y >= H) continue;
              const double* in_row = in + ((n * Cin + ci) * H + y) * W;
              const double* w_row = w + ((co * Cin + ci) * kH + u) * kW;
              for (int64_t v = 0; v < kW; ++v) {
                const int64_t x = j * stride + v - padding;
                if (x < 0 || x >= W) continue;
                acc += in_row[x] * w_row[v];
              }
            }
          o[((n * Cout + co) * Hout + i) * Wout + j] = acc;
        }
    }
  return out;
}

Tensor conv_transpose2d_core(const Tensor& input, const Tensor& weight,
                             int64_t stride, int64_t padding) {
  Tensor empty_bias({0});
  return conv_transpose2d_fwd(input, weight, empty_bias, stride, padding);
}

Tensor conv_transpose2d_fwd(const Tensor& input, const Tensor& weight,
                            const Tensor& bias, int64_t stride, int64_t padding) {
  check_conv_args(input, weight, bias, stride, padding, true);
  const int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t Cout = weight.dim(1), kH = weight.dim(2), kW = weight.dim(3);
  const int64_t Hout = conv_transpose_out_dim(H, kH, stride, padding);
  const int64_t Wout = conv_transpose_out_dim(W, kW, stride, padding);

  Tensor out({N, Cout, Hout, Wout});
  if (bias.numel()) {
    double* o = out.data.data();
    for (int64_t n = 0; n < N; ++n)
      for (int64_t co = 0; co < Cout; ++co) {
        double* plane = o + (n * Cout + co) * Hout * Wout;
        for (int64_t p = 0; p < Hout * Wout; ++p) plane[p] = bias[co];
      }
  }
  const double* in = input.data.data();
  const double* w = weight.data.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t ci = 0; ci < Cin; ++ci)
      for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j) {
          const double x = in[((n * Cin + ci) * H + i) * W + j];
          if (x == 0.0) continue;
          for (int64_t co = 0; co < Cout; ++co)
            for (int64_t u = 0; u < kH; ++u) {
              const int64_t oy = i * stride + u - padding;
              if (oy < 0 || oy >= Hout) continue;
              double* o_row = out.data.data() + ((n * Cout + co) * Hout + oy) * Wout;
              const double* w_row = w + ((ci * Cout + co) * kH + u) * kW;
              for (int64_t v = 0; v < kW; ++v) {
                const int64_t ox = j * stride + v - padding;
                if (ox < 0 || ox >= Wout) continue;
                o_row[ox] += x * w_row[v];
              }
            }
        }
  return out;
}

void conv2d_bwd(const Tensor& input, const Tensor& weight, const Tensor& grad_out,
                int64_t stride, int64_t padding,
                Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias) {
  const int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t Cout = weight.dim(0), kH = weight.dim(2), kW = weight.dim(3);
  const int64_t Hout = grad_out.dim(2), Wout = grad_out.dim(3);

  grad_input = Tensor(input.shape);
  grad_weight = Tensor(weight.shape);
  grad_bias = Tensor({Cout});

  const double* in = input.data.data();
  const double* w = weight.data.data();
  const double* go = grad_out.data.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Cout; ++co)
      for (int64_t i = 0; i < Hout; ++i)
        for (int64_t j = 0; j < Wout; ++j) {
          const double g = go[((n * Cout + co) * Hout + i) * Wout + j];
          grad_bias[co] += g;
          if (g == 0.0) continue;
          for (int64_t ci = 0; ci < Cin; ++ci)
            for (int64_t u = 0; u < kH; ++u) {
              const int64_t y = i * stride + u - padding;
              if (y < 0 || y >= H) continue;
              const double* in_row = in + ((n * Cin + ci) * H + y) * W;
              double* gi_row = grad_input.data.data() + ((n * Cin + ci) * H + y) * W;
              const double* w_row = w + ((co * Cin + ci) * kH + u) * kW;
              double* gw_row = grad_weight.data.data() + ((co * Cin + ci) * kH + u) * kW;
              for (int64_t v = 0; v < kW; ++v) {
                const int64_t x = j * stride + v - padding;
                if (x < 0 || x >= W) continue;
                gi_row[x] += g * w_row[v];
                gw_row[v] += g * in_row[x];
              }
            }
        }
}

void conv_transpose2d_bwd(const Tensor& input, const Tensor& weight,
                          const Tensor& grad_out, int64_t stride, int64_t padding,
                          Tensor& grad_input, Tensor& grad_weight, Tensor& grad_bias) {
  const int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
  const int64_t Cout = weight.dim(1), kH = weight.dim(2), kW = weight.dim(3);
  const int64_t Hout = grad_out.dim(2), Wout = grad_out.dim(3);

  grad_input = Tensor(input.shape);
  grad_weight = Tensor(weight.shape);
  grad_bias = Tensor({Cout});

  const double* go = grad_out.data.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Cout; ++co) {
      const double* plane = go + (n * Cout + co) * Hout * Wout;
      for (int64_t p = 0; p < Hout * Wout; ++p) grad_bias[co] += plane[p];
    }

  const double* in = input.data.data();
  const double* w = weight.data.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t ci = 0; ci < Cin; ++ci)
      for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j) {
          const double x = in[((n * Cin + ci) * H + i) * W + j];
          double gi = 0.0;
          for (int64_t co = 0; co < Cout; ++co)
            for (int64_t u = 0; u < kH; ++u) {
              const int64_t oy = i * stride + u - padding;
              if (oy < 0 || oy >= Hout) continue;
              const double* go_row = go + ((n * Cout + co) * Hout + oy) * Wout;
              const double* w_row = w + ((ci * Cout + co) * kH + u) * kW;
              double* gw_row = grad_weight.data.data() + ((ci * Cout + co) * kH + u) * kW;
              for (int64_t v = 0; v < kW; ++v) {
                const int64_t ox = j * stride + v - padding;
                if (ox < 0 || ox >= Wout) continue;
                gi += go_row[ox] * w_row[v];
                gw_row[v] += go_row[ox] * x;
              }
            }
          grad_input.data[static_cast<size_t>(((n * Cin + ci) * H + i) * W + j)] = gi;
        }
}

Tensor dense_fwd(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.rank() != 2 || weight.rank() != 2)
    throw std::invalid_argument("dense expects rank-2 input and weight, got " +
                                shape_str(x.shape) + " and " + shape_str(weight.shape));
  const int64_t N = x.dim(0), Din = x.dim(1), Dout = weight.dim(1);
  if (weight.dim(0) != Din)
    throw std::invalid_argument("dense dimension mismatch: input " + shape_str(x.shape) +
                                " vs weight " + shape_str(weight.shape));
  if (bias.rank() != 1 || bias.dim(0) != Dout)
    throw std::invalid_argument("dense bias shape " + shape_str(bias.shape) + " does not match Dout=" +
                                std::to_string(Dout));
  Tensor out({N, Dout});
  for (int64_t n = 0; n < N; ++n) {
    double* o_row = out.data.data() + n * Dout;
    for (int64_t j = 0; j < Dout; ++j) o_row[j] = bias[j];
    const double* x_row = x.data.data() + n * Din;
    for (int64_t i = 0; i < Din; ++i) {
      const double xv = x_row[i];
      const double* w_row = weight.data.data() + i * Dout;
      for (int64_t j = 0; j < Dout; ++j) o_row[j] += xv * w_row[j];
    }
  }
  return out;
}

void dense_bwd(const Tensor& x, const Tensor& weight, const Tensor& grad_out,
               Tensor& grad_x, Tensor& grad_weight, Tensor& grad_bias) {
  const int64_t N = x.dim(0), Din = x.dim(1), Dout = weight.dim(1);
  grad_x = Tensor(x.shape);
  grad_weight = Tensor(weight.shape);
  grad_bias = Tensor({Dout});
  const double* go = grad_out.data.data();
  for (int64_t n = 0; n < N; ++n) {
    const double* g_row = go + n * Dout;
    for (int64_t j = 0; j < Dout; ++j) grad_bias[j] += g_row[j];
    const double* x_row = x.data.data() + n * Din;
    double* gx_row = grad_x.data.data() + n * Din;
    for (int64_t i = 0; i < Din; ++i) {
      const double* w_row = weight.data.data() + i * Dout;
      double* gw_row = grad_weight.data.data() + i * Dout;
      double acc = 0.0;
      for (int64_t j = 0; j < Dout; ++j) {
        acc += g_row[j] * w_row[j];
        gw_row[j] += g_row[j] * x_row[i];
      }
      gx_row[i] = acc;
    }
  }
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel())
    throw std::invalid_argument("dot: element count mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

}  // namespace laae
