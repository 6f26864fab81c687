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

// Leapfrog adversarial training.
//
// Each iteration draws n latent vectors and m real patches, then applies Adam
// to theta_G with dL_G/dtheta_G and to theta_D with dL_D/dtheta_D. In the
// default simultaneous mode both gradients are taken at the same iterate
// (theta_G^i, theta_D^i); alternating mode updates G first and then computes
// D's gradient against the updated generator.
//
// All randomness for iteration i comes from substreams of (seed, i, tag,
// example), so a run is reproducible from the seed and resumable from the
// iteration counter alone.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "dcgan/adam.hpp"
#include "dcgan/binary_io.hpp"
#include "dcgan/data.hpp"
#include "dcgan/error.hpp"
#include "dcgan/latent.hpp"
#include "dcgan/loss.hpp"
#include "dcgan/model.hpp"
#include "dcgan/rng.hpp"

namespace dcgan {

enum class UpdateMode { kSimultaneous, kAlternating };

inline std::string update_mode_name(UpdateMode m) {
  return m == UpdateMode::kSimultaneous ? "simultaneous" : "alternating";
}

inline UpdateMode parse_update_mode(const std::string& s) {
  if (s == "simultaneous") return UpdateMode::kSimultaneous;
  if (s == "alternating") return UpdateMode::kAlternating;
  throw ArgumentError("unknown update mode '" + s + "'");
}

struct GanConfig {
  ArchSpec arch;
  std::size_t batch_fake = 200;
  std::size_t batch_real = 200;
  std::uint64_t iterations = 15000;
  double alpha = kLeakyAlpha;
  double noise_variance = 0.5;
  double dropout = 0.5;
  AdamHyper adam;
  std::uint64_t seed = 42;
  UpdateMode update_mode = UpdateMode::kSimultaneous;
  std::uint64_t checkpoint_every = 500;

  NoiseConfig noise() const { return NoiseConfig::from_variance(noise_variance, dropout); }

  void validate() const {
    arch.validate();
    if (batch_fake == 0 || batch_real == 0) {
      throw ArgumentError("batch sizes must be >= 1");
    }
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in [0,1)");
    if (!(noise_variance >= 0.0)) throw ArgumentError("noise variance must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must be in [0,1)");
    if (!(adam.lr > 0.0)) throw ArgumentError("learning rate must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ArgumentError("Adam betas must be in [0,1)");
    }
    if (!(adam.epsilon >= 0.0)) throw ArgumentError("Adam epsilon must be >= 0");
  }

  friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

inline nlohmann::json config_to_json(const GanConfig& c) {
  return {
      {"arch",
       {{"latent_dim", c.arch.latent_dim},
        {"image_size", c.arch.image_size},
        {"image_channels", c.arch.image_channels},
        {"gen_base_channels", c.arch.gen_base_channels},
        {"gen_channels", c.arch.gen_channels},
        {"disc_channels", c.arch.disc_channels}}},
      {"batch_fake", c.batch_fake},
      {"batch_real", c.batch_real},
      {"iterations", c.iterations},
      {"alpha", c.alpha},
      {"noise_variance", c.noise_variance},
      {"dropout", c.dropout},
      {"adam",
       {{"lr", c.adam.lr},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"epsilon", c.adam.epsilon}}},
      {"seed", c.seed},
      {"update_mode", update_mode_name(c.update_mode)},
      {"checkpoint_every", c.checkpoint_every},
  };
}

inline GanConfig config_from_json(const nlohmann::json& j) {
  GanConfig c;
  const auto& a = j.at("arch");
  c.arch.latent_dim = a.at("latent_dim").get<std::size_t>();
  c.arch.image_size = a.at("image_size").get<std::size_t>();
  c.arch.image_channels = a.at("image_channels").get<std::size_t>();
  c.arch.gen_base_channels = a.at("gen_base_channels").get<std::size_t>();
  c.arch.gen_channels = a.at("gen_channels").get<std::array<std::size_t, 2>>();
  c.arch.disc_channels = a.at("disc_channels").get<std::array<std::size_t, 3>>();
  c.batch_fake = j.at("batch_fake").get<std::size_t>();
  c.batch_real = j.at("batch_real").get<std::size_t>();
  c.iterations = j.at("iterations").get<std::uint64_t>();
  c.alpha = j.at("alpha").get<double>();
  c.noise_variance = j.at("noise_variance").get<double>();
  c.dropout = j.at("dropout").get<double>();
  const auto& o = j.at("adam");
  c.adam = {o.at("lr").get<double>(), o.at("beta1").get<double>(),
            o.at("beta2").get<double>(), o.at("epsilon").get<double>()};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.update_mode = parse_update_mode(j.at("update_mode").get<std::string>());
  c.checkpoint_every = j.at("checkpoint_every").get<std::uint64_t>();
  return c;
}

/// Everything that evolves during training.
struct TrainState {
  ParamSet theta_g;
  ParamSet theta_d;
  std::vector<AdamState> adam_g;
  std::vector<AdamState> adam_d;
  std::uint64_t iteration = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

inline std::vector<AdamState> fresh_adam(const ParamSet& params, const AdamHyper& h) {
  std::vector<AdamState> out;
  for (const auto& e : params) out.push_back(AdamState::fresh(e.value.shape(), h));
  return out;
}

inline TrainState initial_state(const GanConfig& config) {
  config.validate();
  auto [g, d] = init_params(config.arch, config.seed);
  TrainState s;
  s.adam_g = fresh_adam(g, config.adam);
  s.adam_d = fresh_adam(d, config.adam);
  s.theta_g = std::move(g);
  s.theta_d = std::move(d);
  return s;
}

struct IterationRecord {
  std::uint64_t iter = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double p_real_mean = 0.0;
  double p_fake_mean = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const std::string& msg, IterationRecord rec)
      : DivergenceError(msg), record(rec) {}

  IterationRecord record;
  std::string last_checkpoint;
};

struct TrainReport {
  std::vector<IterationRecord> records;

  static constexpr const char* kCsvHeader = "iter,loss_d,loss_g,p_real_mean,p_fake_mean";

  /// Shortest round-trip decimal for every value.
  std::string to_csv() const {
    std::string out = std::string(kCsvHeader) + "\n";
    char buf[64];
    auto put = [&](double v) {
      auto r = std::to_chars(buf, buf + sizeof(buf), v);
      out.append(buf, r.ptr);
    };
    for (const auto& r : records) {
      out += std::to_string(r.iter);
      for (double v : {r.loss_d, r.loss_g, r.p_real_mean, r.p_fake_mean}) {
        out += ',';
        put(v);
      }
      out += '\n';
    }
    return out;
  }

  void write_csv(const std::string& path) const { write_file(path, to_csv()); }
};

namespace detail {

inline void require_finite(const ParamSet& grads, const IterationRecord& rec,
                           const char* which) {
  for (const auto& e : grads) {
    for (double v : e.value.data()) {
      if (!std::isfinite(v)) {
        throw TrainingDiverged(std::string("non-finite ") + which +
                                   " gradient in " + e.name + " at iteration " +
                                   std::to_string(rec.iter),
                               rec);
      }
    }
  }
}

inline void apply_adam(ParamSet& params, const ParamSet& grads,
                       std::vector<AdamState>& states) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam_update(params[i].value, grads[i].value, states[i]);
  }
}

inline std::vector<Tensor> draw_latents(const GanConfig& c, std::uint64_t it) {
  RngStream rng = RngStream::derive(c.seed, it, StreamTag::kLatent);
  std::vector<Tensor> zs;
  zs.reserve(c.batch_fake);
  for (std::size_t k = 0; k < c.batch_fake; ++k) {
    zs.push_back(sample_z(rng, c.arch.latent_dim));
  }
  return zs;
}

struct FakePass {
  std::vector<double> logits;
  double p_mean = 0.0;
};

// Forward fakes through G and D, backpropagating dL_D into d_grads and/or
// dL_G into g_grads. dL_G/dlogit is exactly -dL_D/dlogit for fakes, so one
// discriminator backward serves both.
inline FakePass fake_pass(const GeneratorNet& gnet, const DiscriminatorNet& dnet,
                          const std::vector<Tensor>& zs, const GanConfig& c,
                          std::uint64_t it, StreamTag noise_tag,
                          ParamSet* d_grads, ParamSet* g_grads,
                          ParamSet& scratch_d) {
  FakePass out;
  out.logits.reserve(zs.size());
  const std::size_t n = zs.size();
  for (std::size_t k = 0; k < n; ++k) {
    const GeneratorTrace gt = generator_trace(gnet, zs[k]);
    RngStream rng = RngStream::derive(c.seed, it, noise_tag, k);
    const DiscriminatorTrace dt = discriminator_trace(dnet, gt.output(), rng, true);
    out.logits.push_back(dt.logit);
    out.p_mean += sigmoid(dt.logit);
    const double gl = loss_d_fake_grad(dt.logit, n);
    ParamSet& dg = d_grads ? *d_grads : scratch_d;
    Tensor gx = discriminator_backward(dnet, dt, gl, dg, g_grads != nullptr);
    if (g_grads) generator_backward(gnet, gt, scale(gx, -1.0), *g_grads);
  }
  out.p_mean /= static_cast<double>(n);
  return out;
}

inline std::pair<std::vector<double>, double> real_pass(
    const DiscriminatorNet& dnet, const std::vector<const Tensor*>& batch,
    const GanConfig& c, std::uint64_t it, ParamSet& d_grads) {
  std::vector<double> logits;
  logits.reserve(batch.size());
  double p_mean = 0.0;
  const std::size_t m = batch.size();
  for (std::size_t k = 0; k < m; ++k) {
    RngStream rng = RngStream::derive(c.seed, it, StreamTag::kRealNoise, k);
    const DiscriminatorTrace dt = discriminator_trace(dnet, *batch[k], rng, true);
    logits.push_back(dt.logit);
    p_mean += sigmoid(dt.logit);
    discriminator_backward(dnet, dt, loss_d_real_grad(dt.logit, m), d_grads, false);
  }
  return {std::move(logits), p_mean / static_cast<double>(m)};
}

inline void require_finite_losses(const IterationRecord& rec) {
  if (!std::isfinite(rec.loss_d) || !std::isfinite(rec.loss_g)) {
    throw TrainingDiverged("non-finite loss at iteration " + std::to_string(rec.iter),
                           rec);
  }
}

}  // namespace detail

/// Draws the real batch for iteration `it`: m indices uniform with
/// replacement.
inline std::vector<const Tensor*> real_batch_for(const PatchDataset& ds,
                                                 const GanConfig& c,
                                                 std::uint64_t it) {
  RngStream rng = RngStream::derive(c.seed, it, StreamTag::kRealIndex);
  return sample_batch(ds, c.batch_real, rng);
}

struct StepGradients {
  ParamSet g;  // dL_G / dtheta_G
  ParamSet d;  // dL_D / dtheta_D
  IterationRecord record;
};

/// Both gradients at the current iterate (theta_G^i, theta_D^i). The
/// generator's gradient flows through the noised discriminator with the same
/// noise and dropout draws the discriminator's own gradient uses.
inline StepGradients simultaneous_gradients(const TrainState& state,
                                            const std::vector<const Tensor*>& real_batch,
                                            const GanConfig& c) {
  const std::uint64_t it = state.iteration;
  const auto zs = detail::draw_latents(c, it);
  StepGradients out{state.theta_g.zeros_like(), state.theta_d.zeros_like(), {}};
  ParamSet scratch = state.theta_d.zeros_like();
  const auto gnet = GeneratorNet::prepare(state.theta_g, c.arch, true);
  const auto dnet =
      DiscriminatorNet::prepare(state.theta_d, c.arch, c.alpha, c.noise(), true);
  const auto fakes = detail::fake_pass(gnet, dnet, zs, c, it, StreamTag::kFakeNoise,
                                       &out.d, &out.g, scratch);
  const auto [real_logits, p_real] = detail::real_pass(dnet, real_batch, c, it, out.d);
  out.record.iter = it;
  out.record.loss_d = loss_d_from_logits(fakes.logits, real_logits);
  out.record.loss_g = loss_g_from_logits(fakes.logits);
  out.record.p_fake_mean = fakes.p_mean;
  out.record.p_real_mean = p_real;
  return out;
}

/// One leapfrog iteration on `state` using the given real batch. Throws
/// TrainingDiverged (state untouched) on non-finite losses or gradients.
inline IterationRecord train_step(TrainState& state,
                                  const std::vector<const Tensor*>& real_batch,
                                  const GanConfig& c) {
  if (real_batch.size() != c.batch_real) {
    throw ArgumentError("train_step: expected " + std::to_string(c.batch_real) +
                        " real patches, got " + std::to_string(real_batch.size()));
  }
  const std::uint64_t it = state.iteration;

  if (c.update_mode == UpdateMode::kSimultaneous) {
    StepGradients grads = simultaneous_gradients(state, real_batch, c);
    detail::require_finite_losses(grads.record);
    detail::require_finite(grads.g, grads.record, "generator");
    detail::require_finite(grads.d, grads.record, "discriminator");
    detail::apply_adam(state.theta_g, grads.g, state.adam_g);
    detail::apply_adam(state.theta_d, grads.d, state.adam_d);
    state.iteration = it + 1;
    return grads.record;
  }

  const auto zs = detail::draw_latents(c, it);
  IterationRecord rec;
  rec.iter = it;
  ParamSet g_grads = state.theta_g.zeros_like();
  ParamSet d_grads = state.theta_d.zeros_like();
  ParamSet scratch = state.theta_d.zeros_like();
  const auto gnet = GeneratorNet::prepare(state.theta_g, c.arch, true);
  const auto dnet =
      DiscriminatorNet::prepare(state.theta_d, c.arch, c.alpha, c.noise(), true);

  // Generator step against the current discriminator.
  const auto g_phase = detail::fake_pass(gnet, dnet, zs, c, it, StreamTag::kFakeNoise,
                                         nullptr, &g_grads, scratch);
  rec.loss_g = loss_g_from_logits(g_phase.logits);
  if (!std::isfinite(rec.loss_g)) {
    throw TrainingDiverged("non-finite generator loss at iteration " +
                               std::to_string(it), rec);
  }
  detail::require_finite(g_grads, rec, "generator");
  ParamSet theta_g = state.theta_g;
  auto adam_g = state.adam_g;
  detail::apply_adam(theta_g, g_grads, adam_g);

  // Discriminator step against the updated generator.
  const auto gnet_next = GeneratorNet::prepare(theta_g, c.arch);
  const auto d_phase = detail::fake_pass(gnet_next, dnet, zs, c, it,
                                         StreamTag::kFakeNoiseSecondPass,
                                         &d_grads, nullptr, scratch);
  const auto [real_logits, p_real] = detail::real_pass(dnet, real_batch, c, it, d_grads);
  rec.loss_d = loss_d_from_logits(d_phase.logits, real_logits);
  rec.p_fake_mean = d_phase.p_mean;
  rec.p_real_mean = p_real;
  detail::require_finite_losses(rec);
  detail::require_finite(d_grads, rec, "discriminator");
  state.theta_g = std::move(theta_g);
  state.adam_g = std::move(adam_g);
  detail::apply_adam(state.theta_d, d_grads, state.adam_d);
  state.iteration = it + 1;
  return rec;
}

struct TrainOptions {
  /// Called every `checkpoint_every` iterations and after the last one;
  /// returns the path written.
  std::function<std::string(const TrainState&)> write_checkpoint;
  std::function<void(const IterationRecord&)> on_iteration;
};

/// Runs iterations state.iteration .. config.iterations - 1.
inline TrainReport train(const PatchDataset& dataset, const GanConfig& config,
                         TrainState& state, const TrainOptions& options = {}) {
  config.validate();
  if (dataset.empty()) throw DataError("training dataset is empty");
  TrainReport report;
  std::string last_checkpoint;
  while (state.iteration < config.iterations) {
    const auto batch = real_batch_for(dataset, config, state.iteration);
    try {
      report.records.push_back(train_step(state, batch, config));
    } catch (TrainingDiverged& e) {
      e.last_checkpoint = last_checkpoint;
      throw;
    }
    if (options.on_iteration) options.on_iteration(report.records.back());
    const bool last = state.iteration == config.iterations;
    const bool periodic = config.checkpoint_every > 0 &&
                          state.iteration % config.checkpoint_every == 0;
    if (options.write_checkpoint && (last || periodic)) {
      last_checkpoint = options.write_checkpoint(state);
    }
  }
  return report;
}

inline std::tuple<ParamSet, ParamSet, TrainReport> train(const PatchDataset& dataset,
                                                         const GanConfig& config) {
  TrainState state = initial_state(config);
  TrainReport report = train(dataset, config, state);
  return {std::move(state.theta_g), std::move(state.theta_d), std::move(report)};
}

}  // namespace dcgan
