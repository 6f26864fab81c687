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

// Central finite-difference checks of every analytic backward pass.
//
// Each layer is checked through the scalar objective <r, layer(x)> for a
// random probe r; the networks and the full adversarial step are checked
// through their losses, re-evaluated with forward passes only. Stochastic
// layers replay fixed draws by re-deriving the same RNG substream for every
// evaluation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcgan/layers.hpp"
#include "dcgan/loss.hpp"
#include "dcgan/model.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"
#include "dcgan/train.hpp"

namespace dcgan {

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;
/// Denominator floor for the relative error, so exact zeros compare as equal
/// without dividing by zero.
inline constexpr double kGradCheckFloor = 1e-8;

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;

  bool passed() const { return max_rel_error < kGradCheckTolerance; }
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

/// Central differences of `f` w.r.t. every element of `x`, compared with
/// `analytic`. `x` is perturbed in place and restored.
inline double max_fd_error(Tensor& x, const Tensor& analytic,
                           const std::function<double()>& f,
                           std::size_t* checked = nullptr) {
  require_same_shape(x, analytic, "gradcheck");
  double worst = 0.0;
  auto d = x.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double saved = d[i];
    d[i] = saved + kFiniteDifferenceStep;
    const double up = f();
    d[i] = saved - kFiniteDifferenceStep;
    const double down = f();
    d[i] = saved;
    const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
    worst = std::max(worst, relative_error(analytic[i], numeric));
  }
  if (checked) *checked += d.size();
  return worst;
}

namespace detail {

inline Tensor random_tensor(Shape shape, RngStream& rng, double stddev = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.mutable_data()) v = stddev * rng.normal();
  return t;
}

inline void merge(std::vector<GradCheckResult>& into, const GradCheckResult& r) {
  for (auto& e : into) {
    if (e.name == r.name) {
      e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
      e.checked += r.checked;
      return;
    }
  }
  into.push_back(r);
}

inline GradCheckResult check_fc(RngStream& rng) {
  Tensor x = random_tensor(Shape{4}, rng);
  Tensor w = random_tensor(Shape{4, 3}, rng);
  Tensor b = random_tensor(Shape{3}, rng);
  const Tensor r = random_tensor(Shape{3}, rng);
  Tensor gw = Tensor::zeros(w.shape()), gb = Tensor::zeros(b.shape());
  const Tensor gx = fully_connected_backward(x, w, r, gw, gb);
  auto f = [&] { return dot(r, fully_connected(x, w, b)); };
  GradCheckResult res{"fully_connected"};
  res.max_rel_error = std::max({max_fd_error(x, gx, f, &res.checked),
                                max_fd_error(w, gw, f, &res.checked),
                                max_fd_error(b, gb, f, &res.checked)});
  return res;
}

inline GradCheckResult check_conv(RngStream& rng, ConvMode mode, std::size_t stride) {
  const bool transposed = mode == ConvMode::kTransposed;
  const std::size_t extent = transposed ? 4 / stride : 4;
  Tensor x = random_tensor(Shape{extent, extent, 2}, rng);
  ConvKernel k{random_tensor(Shape{3, 3, 2, 3}, rng), random_tensor(Shape{3}, rng),
               stride, mode};
  auto forward = [&] { return transposed ? transposed_conv2d(x, k) : conv2d(x, k); };
  const Tensor r = random_tensor(forward().shape(), rng);
  const ConvGrads g = transposed ? transposed_conv2d_backward(x, k, r)
                                 : conv2d_backward(x, k, r);
  auto f = [&] { return dot(r, forward()); };
  GradCheckResult res{std::string(transposed ? "transposed_conv2d" : "conv2d") +
                      "/stride" + std::to_string(stride)};
  res.max_rel_error = std::max({max_fd_error(x, g.input, f, &res.checked),
                                max_fd_error(k.weights, g.weights, f, &res.checked),
                                max_fd_error(k.bias, g.bias, f, &res.checked)});
  return res;
}

inline GradCheckResult check_elementwise(RngStream& rng, const std::string& name,
                                         const std::function<Tensor(const Tensor&)>& fwd,
                                         const std::function<Tensor(const Tensor&, const Tensor&)>& bwd) {
  Tensor x = random_tensor(Shape{4, 4, 2}, rng);
  const Tensor r = random_tensor(fwd(x).shape(), rng);
  const Tensor gx = bwd(x, r);
  GradCheckResult res{name};
  res.max_rel_error = max_fd_error(x, gx, [&] { return dot(r, fwd(x)); }, &res.checked);
  return res;
}

inline GradCheckResult check_losses(RngStream& rng) {
  Tensor fake = random_tensor(Shape{3}, rng, 2.0);
  Tensor real = random_tensor(Shape{2}, rng, 2.0);
  Tensor g_fake_d = Tensor::zeros(fake.shape()), g_real_d = Tensor::zeros(real.shape());
  Tensor g_fake_g = Tensor::zeros(fake.shape());
  for (std::size_t i = 0; i < fake.size(); ++i) {
    g_fake_d[i] = loss_d_fake_grad(fake[i], fake.size());
    g_fake_g[i] = loss_g_grad(fake[i], fake.size());
  }
  for (std::size_t i = 0; i < real.size(); ++i) {
    g_real_d[i] = loss_d_real_grad(real[i], real.size());
  }
  auto ld = [&] { return loss_d_from_logits(fake.data(), real.data()); };
  auto lg = [&] { return loss_g_from_logits(fake.data()); };
  GradCheckResult res{"adversarial_losses"};
  res.max_rel_error = std::max({max_fd_error(fake, g_fake_d, ld, &res.checked),
                                max_fd_error(real, g_real_d, ld, &res.checked),
                                max_fd_error(fake, g_fake_g, lg, &res.checked)});
  return res;
}

}  // namespace detail

/// Tiny topology used for network-level checks: 4x4x3 images, 2-dim latent.
inline ArchSpec micro_arch() {
  ArchSpec a;
  a.latent_dim = 2;
  a.image_size = 4;
  a.image_channels = 3;
  a.gen_base_channels = 2;
  a.gen_channels = {3, 2};
  a.disc_channels = {2, 3, 4};
  return a;
}

inline GanConfig micro_config(std::uint64_t seed) {
  GanConfig c;
  c.arch = micro_arch();
  c.batch_fake = 2;
  c.batch_real = 2;
  c.iterations = 1;
  c.seed = seed;
  return c;
}

/// Random parameters with unit-scale weights and biases so gradients are
/// well away from zero.
inline ParamSet random_params(ParamSet layout, RngStream& rng, double stddev = 0.5) {
  for (auto& e : layout) e.value = detail::random_tensor(e.value.shape(), rng, stddev);
  return layout;
}

/// Forward-only evaluation of (L_D, L_G) for iteration `it`, replaying the
/// same latent and noise draws training uses.
inline std::pair<double, double> evaluate_losses(const ParamSet& theta_g,
                                                 const ParamSet& theta_d,
                                                 const std::vector<const Tensor*>& reals,
                                                 const GanConfig& c, std::uint64_t it) {
  const auto zs = detail::draw_latents(c, it);
  const auto gnet = GeneratorNet::prepare(theta_g, c.arch);
  const auto dnet = DiscriminatorNet::prepare(theta_d, c.arch, c.alpha, c.noise());
  std::vector<double> fake, real;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    RngStream rng = RngStream::derive(c.seed, it, StreamTag::kFakeNoise, k);
    fake.push_back(discriminator_trace(dnet, generator_trace(gnet, zs[k]).output(), rng,
                                       true).logit);
  }
  for (std::size_t k = 0; k < reals.size(); ++k) {
    RngStream rng = RngStream::derive(c.seed, it, StreamTag::kRealNoise, k);
    real.push_back(discriminator_trace(dnet, *reals[k], rng, true).logit);
  }
  return {loss_d_from_logits(fake, real), loss_g_from_logits(fake)};
}

namespace detail {

inline std::vector<GradCheckResult> check_networks(std::uint64_t seed) {
  const GanConfig c = micro_config(seed);
  RngStream rng = RngStream::derive(seed, 0, StreamTag::kGradCheck, 1);
  TrainState state;
  state.theta_g = random_params(generator_param_layout(c.arch), rng);
  state.theta_d = random_params(discriminator_param_layout(c.arch), rng);
  std::vector<Tensor> real_store;
  for (std::size_t k = 0; k < c.batch_real; ++k) {
    Tensor t = Tensor::zeros(c.arch.image_shape());
    for (double& v : t.mutable_data()) v = rng.uniform();
    real_store.push_back(std::move(t));
  }
  std::vector<const Tensor*> reals;
  for (const auto& t : real_store) reals.push_back(&t);

  std::vector<GradCheckResult> out;

  // Generator alone: <r, G(z)> w.r.t. theta_G.
  {
    const Tensor z = random_tensor(Shape{c.arch.latent_dim}, rng);
    const auto gnet = GeneratorNet::prepare(state.theta_g, c.arch, true);
    const auto tr = generator_trace(gnet, z);
    const Tensor r = random_tensor(tr.output().shape(), rng);
    ParamSet grads = state.theta_g.zeros_like();
    generator_backward(gnet, tr, r, grads);
    ParamSet params = state.theta_g;
    auto f = [&] { return dot(r, generator_forward(params, c.arch, z)); };
    GradCheckResult res{"generator"};
    for (std::size_t i = 0; i < params.size(); ++i) {
      res.max_rel_error = std::max(
          res.max_rel_error, max_fd_error(params[i].value, grads[i].value, f, &res.checked));
    }
    out.push_back(res);
  }

  // Discriminator alone (training mode, fixed draws): logit w.r.t. theta_D and x.
  {
    Tensor x = real_store[0];
    const auto dnet = DiscriminatorNet::prepare(state.theta_d, c.arch, c.alpha, c.noise(), true);
    RngStream draw = RngStream::derive(seed, 0, StreamTag::kGradCheck, 2);
    const auto tr = discriminator_trace(dnet, x, draw, true);
    ParamSet grads = state.theta_d.zeros_like();
    const Tensor gx = discriminator_backward(dnet, tr, 1.0, grads, true);
    ParamSet params = state.theta_d;
    auto f = [&] {
      RngStream replay = RngStream::derive(seed, 0, StreamTag::kGradCheck, 2);
      return discriminator_forward(params, c.arch, x, c.noise(), replay, true, c.alpha).logit;
    };
    GradCheckResult res{"discriminator"};
    res.max_rel_error = max_fd_error(x, gx, f, &res.checked);
    for (std::size_t i = 0; i < params.size(); ++i) {
      res.max_rel_error = std::max(
          res.max_rel_error, max_fd_error(params[i].value, grads[i].value, f, &res.checked));
    }
    out.push_back(res);
  }

  // Full adversarial step: dL_G/dtheta_G through G then D, dL_D/dtheta_D.
  {
    const StepGradients g = simultaneous_gradients(state, reals, c);
    ParamSet theta_g = state.theta_g;
    ParamSet theta_d = state.theta_d;
    auto lg = [&] { return evaluate_losses(theta_g, theta_d, reals, c, 0).second; };
    auto ld = [&] { return evaluate_losses(theta_g, theta_d, reals, c, 0).first; };
    GradCheckResult rg{"composite/loss_g_wrt_generator"};
    for (std::size_t i = 0; i < theta_g.size(); ++i) {
      rg.max_rel_error = std::max(
          rg.max_rel_error, max_fd_error(theta_g[i].value, g.g[i].value, lg, &rg.checked));
    }
    GradCheckResult rd{"composite/loss_d_wrt_discriminator"};
    for (std::size_t i = 0; i < theta_d.size(); ++i) {
      rd.max_rel_error = std::max(
          rd.max_rel_error, max_fd_error(theta_d[i].value, g.d[i].value, ld, &rd.checked));
    }
    out.push_back(rg);
    out.push_back(rd);
  }
  return out;
}

}  // namespace detail

/// Runs every check for each seed; results are the worst case over seeds.
inline std::vector<GradCheckResult> run_gradcheck_suite(
    const std::vector<std::uint64_t>& seeds = {1, 2, 3, 4, 5}) {
  std::vector<GradCheckResult> results;
  const double alpha = kLeakyAlpha;
  for (std::uint64_t seed : seeds) {
    RngStream rng = RngStream::derive(seed, 0, StreamTag::kGradCheck, 0);
    detail::merge(results, detail::check_fc(rng));
    detail::merge(results, detail::check_conv(rng, ConvMode::kConv, 1));
    detail::merge(results, detail::check_conv(rng, ConvMode::kConv, 2));
    detail::merge(results, detail::check_conv(rng, ConvMode::kTransposed, 1));
    detail::merge(results, detail::check_conv(rng, ConvMode::kTransposed, 2));
    detail::merge(results, detail::check_elementwise(
                               rng, "relu", [](const Tensor& x) { return relu(x); },
                               [](const Tensor& x, const Tensor& g) { return relu_backward(x, g); }));
    detail::merge(results, detail::check_elementwise(
                               rng, "leaky_relu",
                               [alpha](const Tensor& x) { return leaky_relu(x, alpha); },
                               [alpha](const Tensor& x, const Tensor& g) {
                                 return leaky_relu_backward(x, alpha, g);
                               }));
    detail::merge(results, detail::check_elementwise(
                               rng, "global_avg_pool",
                               [](const Tensor& x) { return global_avg_pool(x); },
                               [](const Tensor& x, const Tensor& g) {
                                 return global_avg_pool_backward(x.shape(), g);
                               }));
    detail::merge(results, detail::check_elementwise(
                               rng, "gaussian_noise",
                               [seed](const Tensor& x) {
                                 RngStream r = RngStream::derive(seed, 0, StreamTag::kGradCheck, 3);
                                 return gaussian_noise(x, 0.7, r, true);
                               },
                               [](const Tensor&, const Tensor& g) { return g; }));
    const Tensor mask = [&] {
      RngStream r = RngStream::derive(seed, 0, StreamTag::kGradCheck, 4);
      return dropout_mask(Shape{4, 4, 2}, 0.5, r);
    }();
    detail::merge(results, detail::check_elementwise(
                               rng, "dropout",
                               [&mask](const Tensor& x) { return multiply(x, mask); },
                               [&mask](const Tensor&, const Tensor& g) { return multiply(g, mask); }));
    detail::merge(results, detail::check_losses(rng));
    for (const auto& r : detail::check_networks(seed)) detail::merge(results, r);
  }
  return results;
}

}  // namespace dcgan
