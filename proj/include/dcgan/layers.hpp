// Copyright 2026 The lesion-dcgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward and vector-Jacobian passes for the layer types used by the two
// networks. All images are channels-last [height, width, channels].
//
// Convolutions use 3x3 kernels stored as [ky, kx, in, out] with a fixed zero
// padding of 1. A strided conv maps h -> (h - 1) / s + 1; the transposed conv
// is its exact adjoint and maps h -> h * s (for s = 2 this is the adjoint
// with one unit of output padding).

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>

#include "dcgan/error.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

inline constexpr std::size_t kKernelExtent = 3;
inline constexpr std::size_t kConvPadding = 1;

enum class ConvMode { kConv, kTransposed };

struct ConvKernel {
  Tensor weights;  // [3, 3, in, out]
  Tensor bias;     // [out]
  std::size_t stride = 1;
  ConvMode mode = ConvMode::kConv;

  std::size_t in_channels() const { return weights.dim(2); }
  std::size_t out_channels() const { return weights.dim(3); }

  void validate() const {
    if (weights.rank() != 4 || weights.dim(0) != kKernelExtent ||
        weights.dim(1) != kKernelExtent) {
      throw ShapeError("conv kernel must be [3,3,in,out], got " +
                       weights.shape().to_string());
    }
    if (bias.rank() != 1 || bias.dim(0) != out_channels()) {
      throw ShapeError("conv bias " + bias.shape().to_string() +
                       " does not match kernel " + weights.shape().to_string());
    }
    if (stride != 1 && stride != 2) {
      throw ArgumentError("conv stride must be 1 or 2, got " +
                          std::to_string(stride));
    }
  }
};

/// Per-axis output extent of the padded 3x3 conv.
constexpr std::size_t conv_output_extent(std::size_t in, std::size_t stride) {
  return (in + 2 * kConvPadding - kKernelExtent) / stride + 1;
}

/// Swap the in/out channel axes: [ky,kx,a,b] -> [ky,kx,b,a]. A conv with W
/// and a transposed conv with swap_channels(W) are mutual adjoints.
inline Tensor swap_channels(const Tensor& w) {
  const std::size_t a = w.dim(2), b = w.dim(3);
  Tensor out = Tensor::zeros(Shape{w.dim(0), w.dim(1), b, a});
  auto dst = out.mutable_data();
  const auto src = w.data();
  for (std::size_t k = 0; k < w.dim(0) * w.dim(1); ++k) {
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        dst[(k * b + j) * a + i] = src[(k * a + i) * b + j];
      }
    }
  }
  return out;
}

namespace detail {

inline void require_image(const Tensor& x, const char* op) {
  if (x.rank() != 3) {
    throw ShapeError(std::string(op) + " expects a rank-3 [h,w,c] input, got " +
                     x.shape().to_string());
  }
}

// The three loops below share one access pattern: a "small" grid position q
// pairs with the "large" grid position q * stride + k - 1. Each is a template
// on the contiguous channel count (0 = runtime) so the common widths get a
// register-resident accumulator.

inline constexpr std::size_t kMaxStaticChannels = 128;

template <class F>
void dispatch_channels(std::size_t c, F&& f) {
  switch (c) {
    case 3: return f(std::integral_constant<std::size_t, 3>{});
    case 16: return f(std::integral_constant<std::size_t, 16>{});
    case 32: return f(std::integral_constant<std::size_t, 32>{});
    case 64: return f(std::integral_constant<std::size_t, 64>{});
    case 128: return f(std::integral_constant<std::size_t, 128>{});
    default: return f(std::integral_constant<std::size_t, 0>{});
  }
}

inline bool in_range(std::ptrdiff_t v, std::size_t extent) {
  return v >= 0 && v < static_cast<std::ptrdiff_t>(extent);
}

// out[small] += sum_k in[large] * w[k]   (strided conv)
template <std::size_t kOut>
void conv_gather_impl(const double* in, std::size_t h, std::size_t w,
                      std::size_t cin, const double* weights,
                      std::size_t cout_rt, std::size_t stride, double* out,
                      std::size_t oh, std::size_t ow) {
  const std::size_t cout = kOut ? kOut : cout_rt;
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double* orow = out + (oy * ow + ox) * cout;
      alignas(64) double acc[kOut ? kOut : 1];
      double* dst = kOut ? acc : orow;
      if constexpr (kOut != 0) {
        for (std::size_t co = 0; co < kOut; ++co) acc[co] = orow[co];
      }
      for (std::size_t ky = 0; ky < kKernelExtent; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
        if (!in_range(iy, h)) continue;
        for (std::size_t kx = 0; kx < kKernelExtent; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
          if (!in_range(ix, w)) continue;
          const double* irow = in + (iy * static_cast<std::ptrdiff_t>(w) + ix) * cin;
          const double* wk = weights + (ky * kKernelExtent + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = irow[ci];
            const double* wrow = wk + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) dst[co] += v * wrow[co];
          }
        }
      }
      if constexpr (kOut != 0) {
        for (std::size_t co = 0; co < kOut; ++co) orow[co] = acc[co];
      }
    }
  }
}

inline void conv_gather(const double* in, std::size_t h, std::size_t w,
                        std::size_t cin, const double* weights,
                        std::size_t cout, std::size_t stride, double* out,
                        std::size_t oh, std::size_t ow) {
  dispatch_channels(cout, [&](auto n) {
    conv_gather_impl<decltype(n)::value>(in, h, w, cin, weights, cout, stride,
                                         out, oh, ow);
  });
}

// out[large] += in[small] * w[k]   (transposed conv / conv input gradient)
template <std::size_t kOut>
void conv_scatter_impl(const double* in, std::size_t h, std::size_t w,
                       std::size_t cin, const double* weights,
                       std::size_t cout_rt, std::size_t stride, double* out,
                       std::size_t oh, std::size_t ow) {
  const std::size_t cout = kOut ? kOut : cout_rt;
  for (std::size_t iy = 0; iy < h; ++iy) {
    for (std::size_t ix = 0; ix < w; ++ix) {
      const double* irow = in + (iy * w + ix) * cin;
      for (std::size_t ky = 0; ky < kKernelExtent; ++ky) {
        const std::ptrdiff_t py = static_cast<std::ptrdiff_t>(iy * stride + ky) - 1;
        if (!in_range(py, oh)) continue;
        for (std::size_t kx = 0; kx < kKernelExtent; ++kx) {
          const std::ptrdiff_t px = static_cast<std::ptrdiff_t>(ix * stride + kx) - 1;
          if (!in_range(px, ow)) continue;
          double* orow = out + (py * static_cast<std::ptrdiff_t>(ow) + px) * cout;
          const double* wk = weights + (ky * kKernelExtent + kx) * cin * cout;
          alignas(64) double acc[kOut ? kOut : 1];
          double* dst = kOut ? acc : orow;
          if constexpr (kOut != 0) {
            for (std::size_t co = 0; co < kOut; ++co) acc[co] = orow[co];
          }
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = irow[ci];
            const double* wrow = wk + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) dst[co] += v * wrow[co];
          }
          if constexpr (kOut != 0) {
            for (std::size_t co = 0; co < kOut; ++co) orow[co] = acc[co];
          }
        }
      }
    }
  }
}

inline void conv_scatter(const double* in, std::size_t h, std::size_t w,
                         std::size_t cin, const double* weights,
                         std::size_t cout, std::size_t stride, double* out,
                         std::size_t oh, std::size_t ow) {
  dispatch_channels(cout, [&](auto n) {
    conv_scatter_impl<decltype(n)::value>(in, h, w, cin, weights, cout, stride,
                                          out, oh, ow);
  });
}

// grad_w[k, i, j] += sum over paired positions of a[pos_a, i] * b[pos_b, j].
// `a_is_large` says which of the two grids is the large one.
template <std::size_t kB>
void kernel_outer_impl(const double* a_grid, std::size_t ca,
                       const double* b_grid, std::size_t cb_rt,
                       std::size_t small_h, std::size_t small_w,
                       std::size_t large_h, std::size_t large_w,
                       std::size_t stride, bool a_is_large, double* grad_w) {
  const std::size_t cb = kB ? kB : cb_rt;
  for (std::size_t ky = 0; ky < kKernelExtent; ++ky) {
    for (std::size_t kx = 0; kx < kKernelExtent; ++kx) {
      double* gk = grad_w + (ky * kKernelExtent + kx) * ca * cb;
      for (std::size_t i = 0; i < ca; ++i) {
        double* grow = gk + i * cb;
        alignas(64) double acc[kB ? kB : 1];
        double* dst = kB ? acc : grow;
        if constexpr (kB != 0) {
          for (std::size_t j = 0; j < kB; ++j) acc[j] = grow[j];
        }
        for (std::size_t sy = 0; sy < small_h; ++sy) {
          const std::ptrdiff_t ly = static_cast<std::ptrdiff_t>(sy * stride + ky) - 1;
          if (!in_range(ly, large_h)) continue;
          for (std::size_t sx = 0; sx < small_w; ++sx) {
            const std::ptrdiff_t lx = static_cast<std::ptrdiff_t>(sx * stride + kx) - 1;
            if (!in_range(lx, large_w)) continue;
            const std::size_t small_pos = sy * small_w + sx;
            const std::size_t large_pos =
                static_cast<std::size_t>(ly) * large_w + static_cast<std::size_t>(lx);
            const double v = a_grid[(a_is_large ? large_pos : small_pos) * ca + i];
            if (v == 0.0) continue;
            const double* brow = b_grid + (a_is_large ? small_pos : large_pos) * cb;
            for (std::size_t j = 0; j < cb; ++j) dst[j] += v * brow[j];
          }
        }
        if constexpr (kB != 0) {
          for (std::size_t j = 0; j < kB; ++j) grow[j] = acc[j];
        }
      }
    }
  }
}

inline void kernel_outer(const double* a_grid, std::size_t ca,
                         const double* b_grid, std::size_t cb,
                         std::size_t small_h, std::size_t small_w,
                         std::size_t large_h, std::size_t large_w,
                         std::size_t stride, bool a_is_large, double* grad_w) {
  dispatch_channels(cb, [&](auto n) {
    kernel_outer_impl<decltype(n)::value>(a_grid, ca, b_grid, cb, small_h,
                                          small_w, large_h, large_w, stride,
                                          a_is_large, grad_w);
  });
}

inline void add_bias(const Tensor& bias, Tensor& y) {
  const std::size_t c = bias.size();
  auto d = y.mutable_data();
  for (std::size_t p = 0; p < d.size(); p += c) {
    for (std::size_t j = 0; j < c; ++j) d[p + j] += bias[j];
  }
}

inline void accumulate_channel_sums(const Tensor& g, Tensor& sums) {
  const std::size_t c = sums.size();
  const auto d = g.data();
  auto s = sums.mutable_data();
  for (std::size_t p = 0; p < d.size(); p += c) {
    for (std::size_t j = 0; j < c; ++j) s[j] += d[p + j];
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fully connected

/// y = x^T W + b for x [k], W [k, n], b [n].
inline Tensor fully_connected(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.size() != w.dim(0) || b.size() != w.dim(1)) {
    throw ShapeError("fully_connected: x " + x.shape().to_string() + ", W " +
                     w.shape().to_string() + ", b " + b.shape().to_string());
  }
  const std::size_t k = w.dim(0), n = w.dim(1);
  std::vector<double> y(b.values());
  for (std::size_t i = 0; i < k; ++i) {
    const double v = x[i];
    const double* wrow = w.data().data() + i * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += v * wrow[j];
  }
  return Tensor(Shape{n}, std::move(y));
}

/// Accumulates dL/dW and dL/db; returns dL/dx shaped like x.
inline Tensor fully_connected_backward(const Tensor& x, const Tensor& w,
                                       const Tensor& grad_y, Tensor& grad_w,
                                       Tensor& grad_b) {
  const std::size_t k = w.dim(0), n = w.dim(1);
  if (grad_y.size() != n) {
    throw ShapeError("fully_connected_backward: upstream " +
                     grad_y.shape().to_string() + " vs output [" +
                     std::to_string(n) + "]");
  }
  Tensor grad_x = Tensor::zeros(x.shape());
  auto gw = grad_w.mutable_data();
  for (std::size_t i = 0; i < k; ++i) {
    const double v = x[i];
    const double* wrow = w.data().data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      gw[i * n + j] += v * grad_y[j];
      s += wrow[j] * grad_y[j];
    }
    grad_x[i] = s;
  }
  for (std::size_t j = 0; j < n; ++j) grad_b[j] += grad_y[j];
  return grad_x;
}

// ---------------------------------------------------------------------------
// Convolutions

inline Tensor conv2d(const Tensor& x, const ConvKernel& k) {
  detail::require_image(x, "conv2d");
  k.validate();
  if (k.mode != ConvMode::kConv) throw ArgumentError("conv2d needs a conv kernel");
  if (x.dim(2) != k.in_channels()) {
    throw ShapeError("conv2d: input " + x.shape().to_string() +
                     " vs kernel " + k.weights.shape().to_string());
  }
  const std::size_t oh = conv_output_extent(x.dim(0), k.stride);
  const std::size_t ow = conv_output_extent(x.dim(1), k.stride);
  Tensor y = Tensor::zeros(Shape{oh, ow, k.out_channels()});
  detail::add_bias(k.bias, y);
  detail::conv_gather(x.data().data(), x.dim(0), x.dim(1), x.dim(2),
                      k.weights.data().data(), k.out_channels(), k.stride,
                      y.mutable_data().data(), oh, ow);
  return y;
}

inline Tensor transposed_conv2d(const Tensor& x, const ConvKernel& k) {
  detail::require_image(x, "transposed_conv2d");
  k.validate();
  if (k.mode != ConvMode::kTransposed) {
    throw ArgumentError("transposed_conv2d needs a transposed kernel");
  }
  if (x.dim(2) != k.in_channels()) {
    throw ShapeError("transposed_conv2d: input " + x.shape().to_string() +
                     " vs kernel " + k.weights.shape().to_string());
  }
  const std::size_t oh = x.dim(0) * k.stride, ow = x.dim(1) * k.stride;
  Tensor y = Tensor::zeros(Shape{oh, ow, k.out_channels()});
  detail::add_bias(k.bias, y);
  detail::conv_scatter(x.data().data(), x.dim(0), x.dim(1), x.dim(2),
                       k.weights.data().data(), k.out_channels(), k.stride,
                       y.mutable_data().data(), oh, ow);
  return y;
}

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// Backward of conv2d, accumulating into grad_w / grad_b. `swapped_weights`
/// must be swap_channels(k.weights); pass nullptr to skip the input grad.
/// Returns the input gradient (or a placeholder when skipped).
inline Tensor conv2d_backward_accumulate(const Tensor& x, const ConvKernel& k,
                                         const Tensor* swapped_weights,
                                         const Tensor& grad_y, Tensor& grad_w,
                                         Tensor& grad_b) {
  const std::size_t oh = conv_output_extent(x.dim(0), k.stride);
  const std::size_t ow = conv_output_extent(x.dim(1), k.stride);
  if (grad_y.shape() != Shape{oh, ow, k.out_channels()}) {
    throw ShapeError("conv2d_backward: upstream " + grad_y.shape().to_string() +
                     " does not match output [" + std::to_string(oh) + "," +
                     std::to_string(ow) + "," +
                     std::to_string(k.out_channels()) + "]");
  }
  detail::kernel_outer(x.data().data(), x.dim(2), grad_y.data().data(),
                       k.out_channels(), oh, ow, x.dim(0), x.dim(1), k.stride,
                       /*a_is_large=*/true, grad_w.mutable_data().data());
  detail::accumulate_channel_sums(grad_y, grad_b);
  if (swapped_weights == nullptr) return Tensor();
  Tensor grad_x = Tensor::zeros(x.shape());
  detail::conv_scatter(grad_y.data().data(), oh, ow, k.out_channels(),
                       swapped_weights->data().data(), x.dim(2), k.stride,
                       grad_x.mutable_data().data(), x.dim(0), x.dim(1));
  return grad_x;
}

inline Tensor transposed_conv2d_backward_accumulate(
    const Tensor& x, const ConvKernel& k, const Tensor* swapped_weights,
    const Tensor& grad_y, Tensor& grad_w, Tensor& grad_b) {
  const std::size_t oh = x.dim(0) * k.stride, ow = x.dim(1) * k.stride;
  if (grad_y.shape() != Shape{oh, ow, k.out_channels()}) {
    throw ShapeError("transposed_conv2d_backward: upstream " +
                     grad_y.shape().to_string() + " does not match output");
  }
  detail::kernel_outer(x.data().data(), x.dim(2), grad_y.data().data(),
                       k.out_channels(), x.dim(0), x.dim(1), oh, ow, k.stride,
                       /*a_is_large=*/false, grad_w.mutable_data().data());
  detail::accumulate_channel_sums(grad_y, grad_b);
  if (swapped_weights == nullptr) return Tensor();
  Tensor grad_x = Tensor::zeros(x.shape());
  detail::conv_gather(grad_y.data().data(), oh, ow, k.out_channels(),
                      swapped_weights->data().data(), x.dim(2), k.stride,
                      grad_x.mutable_data().data(), x.dim(0), x.dim(1));
  return grad_x;
}

inline ConvGrads conv2d_backward(const Tensor& x, const ConvKernel& k,
                                 const Tensor& grad_y) {
  ConvGrads g{Tensor(), Tensor::zeros(k.weights.shape()),
              Tensor::zeros(k.bias.shape())};
  const Tensor swapped = swap_channels(k.weights);
  g.input = conv2d_backward_accumulate(x, k, &swapped, grad_y, g.weights, g.bias);
  return g;
}

inline ConvGrads transposed_conv2d_backward(const Tensor& x, const ConvKernel& k,
                                            const Tensor& grad_y) {
  ConvGrads g{Tensor(), Tensor::zeros(k.weights.shape()),
              Tensor::zeros(k.bias.shape())};
  const Tensor swapped = swap_channels(k.weights);
  g.input = transposed_conv2d_backward_accumulate(x, k, &swapped, grad_y,
                                                  g.weights, g.bias);
  return g;
}

// ---------------------------------------------------------------------------
// Activations

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.mutable_data()) v = v > 0.0 ? v : 0.0;
  return y;
}

inline Tensor relu_backward(const Tensor& x, const Tensor& grad_y) {
  require_same_shape(x, grad_y, "relu_backward");
  Tensor g = grad_y;
  auto d = g.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(x[i] > 0.0)) d[i] = 0.0;
  }
  return g;
}

/// max(alpha * x, x).
inline Tensor leaky_relu(const Tensor& x, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ArgumentError("leaky_relu alpha must be in [0,1)");
  }
  Tensor y = x;
  for (double& v : y.mutable_data()) v = v > 0.0 ? v : alpha * v;
  return y;
}

inline Tensor leaky_relu_backward(const Tensor& x, double alpha,
                                  const Tensor& grad_y) {
  require_same_shape(x, grad_y, "leaky_relu_backward");
  Tensor g = grad_y;
  auto d = g.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(x[i] > 0.0)) d[i] *= alpha;
  }
  return g;
}

/// Per-channel spatial mean: [h,w,c] -> [1,1,c].
inline Tensor global_avg_pool(const Tensor& x) {
  detail::require_image(x, "global_avg_pool");
  const std::size_t c = x.dim(2);
  Tensor sums = Tensor::zeros(Shape{c});
  detail::accumulate_channel_sums(x, sums);
  const double inv = 1.0 / static_cast<double>(x.dim(0) * x.dim(1));
  std::vector<double> out(c);
  for (std::size_t j = 0; j < c; ++j) out[j] = sums[j] * inv;
  return Tensor(Shape{1, 1, c}, std::move(out));
}

inline Tensor global_avg_pool_backward(const Shape& input_shape,
                                       const Tensor& grad_y) {
  const std::size_t c = input_shape[2];
  if (grad_y.size() != c) {
    throw ShapeError("global_avg_pool_backward: upstream " +
                     grad_y.shape().to_string());
  }
  const double inv = 1.0 / static_cast<double>(input_shape[0] * input_shape[1]);
  Tensor g = Tensor::zeros(input_shape);
  auto d = g.mutable_data();
  for (std::size_t p = 0; p < d.size(); p += c) {
    for (std::size_t j = 0; j < c; ++j) d[p + j] = grad_y[j] * inv;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Stochastic layers

struct NoiseConfig {
  double sigma = 0.70710678118654752;  // variance 1/2
  double dropout_rate = 0.5;

  static NoiseConfig from_variance(double variance, double dropout_rate) {
    if (!(variance >= 0.0)) throw ArgumentError("noise variance must be >= 0");
    return NoiseConfig{std::sqrt(variance), dropout_rate};
  }
};

/// Adds i.i.d. N(0, sigma^2) noise in row-major order when training.
/// Additive noise is a constant under differentiation, so the backward pass
/// is the identity.
inline Tensor gaussian_noise(const Tensor& x, double sigma, RngStream& rng,
                             bool training) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise sigma must be >= 0");
  if (!training || sigma == 0.0) return x;
  Tensor y = x;
  for (double& v : y.mutable_data()) v += sigma * rng.normal();
  return y;
}

/// Inverted-dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
inline Tensor dropout_mask(const Shape& shape, double rate, RngStream& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must be in [0,1)");
  }
  Tensor mask = Tensor::filled(shape, 1.0);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : mask.mutable_data()) v = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

inline Tensor dropout(const Tensor& x, double rate, RngStream& rng,
                      bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout rate must be in [0,1)");
  }
  if (!training || rate == 0.0) return x;
  return multiply(x, dropout_mask(x.shape(), rate, rng));
}

// ---------------------------------------------------------------------------

/// Logistic function, evaluated on the branch that cannot overflow.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace dcgan
