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

// PGAN checkpoint format (all integers little-endian):
//
//   "PGAN" | u32 version = 1 | u32 len, UTF-8 JSON config block
//   | u32 tensor count | tensors...
//
// Each tensor is u32 name length, name, u32 rank, rank x u64 dims, then the
// f64 payload. Tensor order is canonical: generator params ("G/<name>"),
// discriminator params ("D/<name>"), then Adam moments ("AG/<name>/m",
// "AG/<name>/v", "AD/..."). The JSON block carries the GanConfig, the
// iteration counter, per-tensor Adam step counts and hyperparameters, and the
// RNG position. Training randomness is keyed on (seed, iteration), so those
// two values are the complete RNG state.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcgan/binary_io.hpp"
#include "dcgan/error.hpp"
#include "dcgan/train.hpp"

namespace dcgan {

inline constexpr std::string_view kCheckpointMagic = "PGAN";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  GanConfig config;
  TrainState state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline nlohmann::json adam_meta(const std::vector<AdamState>& states) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : states) {
    out.push_back({{"t", s.t},
                   {"lr", s.hyper.lr},
                   {"beta1", s.hyper.beta1},
                   {"beta2", s.hyper.beta2},
                   {"epsilon", s.hyper.epsilon}});
  }
  return out;
}

inline void put_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
  w.put_string(name);
  w.put_u32(static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape().dims()) w.put_u64(d);
  for (double v : t.data()) w.put_f64(v);
}

inline Tensor get_tensor(ByteReader& r, const std::string& expected_name,
                         const Shape& expected_shape) {
  const std::string name = r.string();
  if (name != expected_name) {
    throw FormatError(r.what() + ": expected tensor '" + expected_name +
                      "', found '" + name + "'");
  }
  const auto rank = r.u32();
  if (rank == 0 || rank > 8) {
    throw FormatError(r.what() + ": bad rank for " + name);
  }
  std::vector<std::size_t> dims(rank);
  for (auto& d : dims) {
    d = r.u64();
    if (d == 0) throw FormatError(r.what() + ": zero dim in " + name);
  }
  if (dims != expected_shape.dims()) {
    throw FormatError(r.what() + ": tensor " + name + " has shape " +
                      Shape(dims).to_string() + ", expected " +
                      expected_shape.to_string());
  }
  const std::size_t count = expected_shape.element_count();
  if (count * 8 > r.remaining()) throw FormatError(r.what() + ": truncated tensor " + name);
  std::vector<double> values(count);
  for (auto& v : values) v = r.f64();
  return Tensor(expected_shape, std::move(values));
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& c) {
  const auto& s = c.state;
  nlohmann::json meta = {
      {"config", config_to_json(c.config)},
      {"iteration", s.iteration},
      {"rng", {{"seed", c.config.seed}, {"next_iteration", s.iteration}}},
      {"adam_g", detail::adam_meta(s.adam_g)},
      {"adam_d", detail::adam_meta(s.adam_d)},
  };
  ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(kCheckpointVersion);
  w.put_string(meta.dump());
  const std::size_t count = 3 * (s.theta_g.size() + s.theta_d.size());
  w.put_u32(static_cast<std::uint32_t>(count));
  for (const auto& e : s.theta_g) detail::put_tensor(w, "G/" + e.name, e.value);
  for (const auto& e : s.theta_d) detail::put_tensor(w, "D/" + e.name, e.value);
  for (std::size_t i = 0; i < s.theta_g.size(); ++i) {
    detail::put_tensor(w, "AG/" + s.theta_g[i].name + "/m", s.adam_g[i].m);
    detail::put_tensor(w, "AG/" + s.theta_g[i].name + "/v", s.adam_g[i].v);
  }
  for (std::size_t i = 0; i < s.theta_d.size(); ++i) {
    detail::put_tensor(w, "AD/" + s.theta_d[i].name + "/m", s.adam_d[i].m);
    detail::put_tensor(w, "AD/" + s.theta_d[i].name + "/v", s.adam_d[i].v);
  }
  return w.bytes();
}

inline Checkpoint decode_checkpoint(std::string_view bytes, const std::string& what) {
  ByteReader r(bytes, what);
  if (bytes.size() < 4 || r.take(4) != kCheckpointMagic) {
    throw FormatError(what + ": bad magic, not a PGAN checkpoint");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(what + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  nlohmann::json meta;
  std::vector<std::uint64_t> steps_g, steps_d;
  std::vector<AdamHyper> hyper_g, hyper_d;
  try {
    meta = nlohmann::json::parse(r.string());
    c.config = config_from_json(meta.at("config"));
    c.state.iteration = meta.at("iteration").get<std::uint64_t>();
    auto read_adam = [](const nlohmann::json& arr, std::vector<std::uint64_t>& steps,
                        std::vector<AdamHyper>& hyper) {
      for (const auto& e : arr) {
        steps.push_back(e.at("t").get<std::uint64_t>());
        hyper.push_back({e.at("lr").get<double>(), e.at("beta1").get<double>(),
                         e.at("beta2").get<double>(), e.at("epsilon").get<double>()});
      }
    };
    read_adam(meta.at("adam_g"), steps_g, hyper_g);
    read_adam(meta.at("adam_d"), steps_d, hyper_d);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": bad config block: " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(what + ": bad config block: " + e.what());
  }
  try {
    c.config.arch.validate();
  } catch (const Error& e) {
    throw FormatError(what + ": " + e.what());
  }

  const ParamSet g_layout = generator_param_layout(c.config.arch);
  const ParamSet d_layout = discriminator_param_layout(c.config.arch);
  if (steps_g.size() != g_layout.size() || steps_d.size() != d_layout.size()) {
    throw FormatError(what + ": Adam state count does not match architecture");
  }
  const auto count = r.u32();
  if (count != 3 * (g_layout.size() + d_layout.size())) {
    throw FormatError(what + ": unexpected tensor count " + std::to_string(count));
  }
  for (const auto& e : g_layout) {
    c.state.theta_g.add(e.name, detail::get_tensor(r, "G/" + e.name, e.value.shape()));
  }
  for (const auto& e : d_layout) {
    c.state.theta_d.add(e.name, detail::get_tensor(r, "D/" + e.name, e.value.shape()));
  }
  auto read_moments = [&r](const ParamSet& layout, const std::string& prefix,
                           const std::vector<std::uint64_t>& steps,
                           const std::vector<AdamHyper>& hyper) {
    std::vector<AdamState> out;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& e = layout[i];
      Tensor m = detail::get_tensor(r, prefix + e.name + "/m", e.value.shape());
      Tensor v = detail::get_tensor(r, prefix + e.name + "/v", e.value.shape());
      out.push_back(AdamState{std::move(m), std::move(v), steps[i], hyper[i]});
    }
    return out;
  };
  c.state.adam_g = read_moments(g_layout, "AG/", steps_g, hyper_g);
  c.state.adam_d = read_moments(d_layout, "AD/", steps_d, hyper_d);
  if (r.remaining() != 0) throw FormatError(what + ": trailing bytes after tensors");
  return c;
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  write_file(path, encode_checkpoint(c));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(read_file(path), path);
}

}  // namespace dcgan
