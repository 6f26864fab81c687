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

// Generator and discriminator networks.
//
// Generator:     z[25] -> fc[256] -> reshape[4,4,16]
//                -> tconv/2 [8,8,32] + ReLU -> tconv/2 [16,16,16] + ReLU
//                -> tconv/1 [16,16,3] + ReLU
// Discriminator: x[16,16,3] + noise
//                -> conv/1 [16,16,32] + LReLU + noise
//                -> conv/2 [8,8,64]   + LReLU + noise
//                -> conv/2 [4,4,128]  + LReLU + noise
//                -> global avg pool [1,1,128] -> dropout -> fc [1] -> logit
//
// The widths are carried by ArchSpec so tests can run the same topology at
// micro scale.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dcgan/error.hpp"
#include "dcgan/layers.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

struct ArchSpec {
  std::size_t latent_dim = 25;
  std::size_t image_size = 16;
  std::size_t image_channels = 3;
  std::size_t gen_base_channels = 16;
  std::array<std::size_t, 2> gen_channels = {32, 16};
  std::array<std::size_t, 3> disc_channels = {32, 64, 128};

  std::size_t base_extent() const { return image_size / 4; }
  std::size_t fc_width() const {
    return base_extent() * base_extent() * gen_base_channels;
  }
  Shape image_shape() const {
    return Shape{image_size, image_size, image_channels};
  }

  void validate() const {
    if (latent_dim == 0) throw ArgumentError("latent_dim must be >= 1");
    if (image_size < 4 || image_size % 4 != 0) {
      throw ArgumentError("image_size must be a positive multiple of 4");
    }
    if (image_channels == 0 || gen_base_channels == 0 || gen_channels[0] == 0 ||
        gen_channels[1] == 0 || disc_channels[0] == 0 || disc_channels[1] == 0 ||
        disc_channels[2] == 0) {
      throw ArgumentError("channel widths must be >= 1");
    }
  }

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Learnable tensors of one network in canonical order.
class ParamSet {
 public:
  void add(std::string name, Tensor value) {
    for (const auto& e : entries_) {
      if (e.name == name) throw ArgumentError("duplicate parameter " + name);
    }
    entries_.push_back({std::move(name), std::move(value)});
  }

  const Tensor& get(std::string_view name) const { return entries_[index_of(name)].value; }
  Tensor& get(std::string_view name) { return entries_[index_of(name)].value; }

  std::size_t size() const { return entries_.size(); }
  const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }
  NamedTensor& operator[](std::size_t i) { return entries_[i]; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& e : entries_) out.add(e.name, Tensor::zeros(e.value.shape()));
    return out;
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name == name) return i;
    }
    throw ArgumentError("unknown parameter " + std::string(name));
  }

  std::vector<NamedTensor> entries_;
};

inline constexpr double kInitStddev = 0.02;

namespace detail {

inline Tensor normal_tensor(Shape shape, double stddev, RngStream& rng) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = stddev * rng.normal();
  return t;
}

inline ConvKernel kernel_from(const ParamSet& p, const std::string& layer,
                              std::size_t stride, ConvMode mode) {
  ConvKernel k{p.get(layer + ".weight"), p.get(layer + ".bias"), stride, mode};
  k.validate();
  return k;
}

inline void expect_shape(const Tensor& t, const Shape& want, const char* where) {
  if (t.shape() != want) {
    throw ShapeError(std::string(where) + ": expected " + want.to_string() +
                     ", got " + t.shape().to_string());
  }
}

}  // namespace detail

/// Canonical generator parameter shapes, zero-filled.
inline ParamSet generator_param_layout(const ArchSpec& a) {
  a.validate();
  ParamSet p;
  p.add("fc.weight", Tensor::zeros(Shape{a.latent_dim, a.fc_width()}));
  p.add("fc.bias", Tensor::zeros(Shape{a.fc_width()}));
  const std::array<std::size_t, 4> ch = {a.gen_base_channels, a.gen_channels[0],
                                         a.gen_channels[1], a.image_channels};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string name = "tconv" + std::to_string(i + 1);
    p.add(name + ".weight",
          Tensor::zeros(Shape{kKernelExtent, kKernelExtent, ch[i], ch[i + 1]}));
    p.add(name + ".bias", Tensor::zeros(Shape{ch[i + 1]}));
  }
  return p;
}

inline ParamSet discriminator_param_layout(const ArchSpec& a) {
  a.validate();
  ParamSet p;
  const std::array<std::size_t, 4> ch = {a.image_channels, a.disc_channels[0],
                                         a.disc_channels[1], a.disc_channels[2]};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    p.add(name + ".weight",
          Tensor::zeros(Shape{kKernelExtent, kKernelExtent, ch[i], ch[i + 1]}));
    p.add(name + ".bias", Tensor::zeros(Shape{ch[i + 1]}));
  }
  p.add("fc.weight", Tensor::zeros(Shape{a.disc_channels[2], 1}));
  p.add("fc.bias", Tensor::zeros(Shape{1}));
  return p;
}

/// Weights ~ N(0, 0.02^2), biases zero. Generator first, then discriminator,
/// both drawn from one stream in canonical order.
inline std::pair<ParamSet, ParamSet> init_params(const ArchSpec& arch,
                                                 std::uint64_t seed) {
  RngStream rng = RngStream::derive(seed, 0, StreamTag::kInit);
  auto fill = [&rng](ParamSet p) {
    for (auto& e : p) {
      if (e.name.ends_with(".weight")) {
        e.value = detail::normal_tensor(e.value.shape(), kInitStddev, rng);
      }
    }
    return p;
  };
  ParamSet g = fill(generator_param_layout(arch));
  ParamSet d = fill(discriminator_param_layout(arch));
  return {std::move(g), std::move(d)};
}

// ---------------------------------------------------------------------------
// Generator

/// Kernels unpacked from a ParamSet once per batch, plus the channel-swapped
/// copies the backward pass needs.
struct GeneratorNet {
  ArchSpec arch;
  Tensor fc_weight;
  Tensor fc_bias;
  std::array<ConvKernel, 3> tconv;
  std::array<Tensor, 3> swapped;

  static GeneratorNet prepare(const ParamSet& p, const ArchSpec& arch,
                              bool for_backward = false) {
    arch.validate();
    GeneratorNet net{arch, p.get("fc.weight"), p.get("fc.bias"), {}, {}};
    detail::expect_shape(net.fc_weight, Shape{arch.latent_dim, arch.fc_width()},
                         "generator fc.weight");
    const std::array<std::size_t, 3> strides = {2, 2, 1};
    for (std::size_t i = 0; i < 3; ++i) {
      net.tconv[i] = detail::kernel_from(p, "tconv" + std::to_string(i + 1),
                                         strides[i], ConvMode::kTransposed);
      if (for_backward) net.swapped[i] = swap_channels(net.tconv[i].weights);
    }
    return net;
  }
};

struct GeneratorTrace {
  Tensor z;
  Tensor fc_out;  // [fc_width]
  Tensor base;    // [s/4, s/4, base_channels]
  std::array<Tensor, 3> pre;
  std::array<Tensor, 3> act;

  const Tensor& output() const { return act[2]; }
};

inline GeneratorTrace generator_trace(const GeneratorNet& net, const Tensor& z) {
  const ArchSpec& a = net.arch;
  if (z.size() != a.latent_dim) {
    throw ShapeError("generator expects a latent vector of length " +
                     std::to_string(a.latent_dim) + ", got " +
                     std::to_string(z.size()));
  }
  GeneratorTrace tr;
  tr.z = reshape(z, Shape{a.latent_dim});
  tr.fc_out = fully_connected(tr.z, net.fc_weight, net.fc_bias);
  tr.base = reshape(tr.fc_out,
                    Shape{a.base_extent(), a.base_extent(), a.gen_base_channels});
  const Tensor* in = &tr.base;
  for (std::size_t i = 0; i < 3; ++i) {
    tr.pre[i] = transposed_conv2d(*in, net.tconv[i]);
    tr.act[i] = relu(tr.pre[i]);
    in = &tr.act[i];
  }
  detail::expect_shape(tr.act[0],
                       Shape{a.image_size / 2, a.image_size / 2, a.gen_channels[0]},
                       "generator tconv1");
  detail::expect_shape(tr.act[1],
                       Shape{a.image_size, a.image_size, a.gen_channels[1]},
                       "generator tconv2");
  detail::expect_shape(tr.act[2], a.image_shape(), "generator output");
  return tr;
}

inline Tensor generator_forward(const ParamSet& theta_g, const ArchSpec& arch,
                                const Tensor& z) {
  return generator_trace(GeneratorNet::prepare(theta_g, arch), z).output();
}

/// Accumulates dL/dtheta_G into `grads` given dL/d(output image).
inline void generator_backward(const GeneratorNet& net, const GeneratorTrace& tr,
                               const Tensor& grad_out, ParamSet& grads) {
  Tensor g = grad_out;
  for (std::size_t i = 3; i-- > 0;) {
    g = relu_backward(tr.pre[i], g);
    const Tensor& in = i == 0 ? tr.base : tr.act[i - 1];
    const std::string name = "tconv" + std::to_string(i + 1);
    g = transposed_conv2d_backward_accumulate(in, net.tconv[i], &net.swapped[i], g,
                                              grads.get(name + ".weight"),
                                              grads.get(name + ".bias"));
  }
  fully_connected_backward(tr.z, net.fc_weight, reshape(g, Shape{g.size()}),
                           grads.get("fc.weight"), grads.get("fc.bias"));
}

// ---------------------------------------------------------------------------
// Discriminator

inline constexpr double kLeakyAlpha = 0.1;

struct DiscriminatorNet {
  ArchSpec arch;
  std::array<ConvKernel, 3> conv;
  std::array<Tensor, 3> swapped;
  Tensor fc_weight;
  Tensor fc_bias;
  double alpha = kLeakyAlpha;
  NoiseConfig noise;

  /// `for_backward` also builds the channel-swapped kernels the backward
  /// pass uses for input gradients.
  static DiscriminatorNet prepare(const ParamSet& p, const ArchSpec& arch,
                                  double alpha, NoiseConfig noise,
                                  bool for_backward = false) {
    arch.validate();
    DiscriminatorNet net{arch, {}, {}, p.get("fc.weight"), p.get("fc.bias"),
                         alpha, noise};
    detail::expect_shape(net.fc_weight, Shape{arch.disc_channels[2], 1},
                         "discriminator fc.weight");
    const std::array<std::size_t, 3> strides = {1, 2, 2};
    for (std::size_t i = 0; i < 3; ++i) {
      net.conv[i] = detail::kernel_from(p, "conv" + std::to_string(i + 1),
                                        strides[i], ConvMode::kConv);
      if (for_backward) net.swapped[i] = swap_channels(net.conv[i].weights);
    }
    return net;
  }
};

struct DiscriminatorTrace {
  Tensor input;                // x plus input noise
  std::array<Tensor, 3> pre;   // conv outputs
  std::array<Tensor, 3> out;   // after leaky ReLU and noise
  Tensor pooled;               // [1,1,c]
  Tensor mask;                 // dropout multipliers, [c]
  Tensor dropped;              // [c]
  double logit = 0.0;

  double probability() const { return sigmoid(logit); }
};

/// Noise is drawn from `rng` in a fixed order: input, conv1, conv2, conv3,
/// then the dropout mask. Evaluation mode draws nothing.
inline DiscriminatorTrace discriminator_trace(const DiscriminatorNet& net,
                                              const Tensor& x, RngStream& rng,
                                              bool training) {
  const ArchSpec& a = net.arch;
  detail::expect_shape(x, a.image_shape(), "discriminator input");
  DiscriminatorTrace tr;
  tr.input = gaussian_noise(x, net.noise.sigma, rng, training);
  const Tensor* in = &tr.input;
  std::size_t extent = a.image_size;
  for (std::size_t i = 0; i < 3; ++i) {
    tr.pre[i] = conv2d(*in, net.conv[i]);
    extent = conv_output_extent(extent, net.conv[i].stride);
    detail::expect_shape(tr.pre[i], Shape{extent, extent, a.disc_channels[i]},
                         "discriminator conv");
    tr.out[i] = gaussian_noise(leaky_relu(tr.pre[i], net.alpha), net.noise.sigma,
                               rng, training);
    in = &tr.out[i];
  }
  tr.pooled = global_avg_pool(tr.out[2]);
  const Shape feat{a.disc_channels[2]};
  tr.mask = training ? dropout_mask(feat, net.noise.dropout_rate, rng)
                     : Tensor::filled(feat, 1.0);
  tr.dropped = multiply(reshape(tr.pooled, feat), tr.mask);
  tr.logit = fully_connected(tr.dropped, net.fc_weight, net.fc_bias)[0];
  return tr;
}

struct DiscriminatorOutput {
  double logit;
  double p;
};

inline DiscriminatorOutput discriminator_forward(const ParamSet& theta_d,
                                                 const ArchSpec& arch,
                                                 const Tensor& x,
                                                 const NoiseConfig& noise,
                                                 RngStream& rng, bool training,
                                                 double alpha = kLeakyAlpha) {
  const auto net = DiscriminatorNet::prepare(theta_d, arch, alpha, noise);
  const auto tr = discriminator_trace(net, x, rng, training);
  return {tr.logit, tr.probability()};
}

/// Accumulates dL/dtheta_D for upstream dL/dlogit. Noise and dropout masks
/// from the trace are treated as constants. Returns dL/dx when
/// `want_input_grad` (requires a net prepared for backward), otherwise an
/// empty placeholder.
inline Tensor discriminator_backward(const DiscriminatorNet& net,
                                     const DiscriminatorTrace& tr,
                                     double grad_logit, ParamSet& grads,
                                     bool want_input_grad) {
  const Shape feat{net.arch.disc_channels[2]};
  Tensor g_drop = fully_connected_backward(tr.dropped, net.fc_weight,
                                           Tensor(Shape{1}, {grad_logit}),
                                           grads.get("fc.weight"),
                                           grads.get("fc.bias"));
  Tensor g = multiply(g_drop, tr.mask);
  g = global_avg_pool_backward(tr.out[2].shape(), reshape(g, Shape{1, 1, feat[0]}));
  for (std::size_t i = 3; i-- > 0;) {
    g = leaky_relu_backward(tr.pre[i], net.alpha, g);
    const Tensor& in = i == 0 ? tr.input : tr.out[i - 1];
    const bool need_input = i > 0 || want_input_grad;
    const Tensor* swapped = need_input ? &net.swapped[i] : nullptr;
    if (need_input && net.swapped[i].shape() != Shape{kKernelExtent, kKernelExtent,
                                                      net.conv[i].out_channels(),
                                                      net.conv[i].in_channels()}) {
      throw ArgumentError("discriminator_backward: net not prepared for backward");
    }
    const std::string name = "conv" + std::to_string(i + 1);
    g = conv2d_backward_accumulate(in, net.conv[i], swapped, g,
                                   grads.get(name + ".weight"),
                                   grads.get(name + ".bias"));
  }
  return want_input_grad ? g : Tensor();
}

}  // namespace dcgan
