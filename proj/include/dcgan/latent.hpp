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

#pragma once

#include <cstddef>
#include <vector>

#include "dcgan/error.hpp"
#include "dcgan/model.hpp"
#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

inline constexpr std::size_t kLatentDim = 25;

/// i.i.d. standard normal latent vector.
inline Tensor sample_z(RngStream& rng, std::size_t dim = kLatentDim) {
  Tensor z = Tensor::zeros(Shape{dim});
  for (double& v : z.mutable_data()) v = rng.normal();
  return z;
}

/// (1 - t) z1 + t z2 for t in [0, 1]; the endpoints are returned exactly.
inline Tensor lerp(const Tensor& z1, const Tensor& z2, double t) {
  require_same_shape(z1, z2, "lerp");
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ArgumentError("lerp: t must lie in [0,1]");
  }
  if (t == 0.0) return z1;
  if (t == 1.0) return z2;
  std::vector<double> out(z1.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - t) * z1[i] + t * z2[i];
  }
  return Tensor(z1.shape(), std::move(out));
}

/// Generator images along the straight line from z1 to z2, `steps` frames
/// including both endpoints.
inline std::vector<Tensor> interpolation_strip(const ParamSet& theta_g,
                                               const ArchSpec& arch,
                                               const Tensor& z1, const Tensor& z2,
                                               std::size_t steps) {
  if (steps < 2) throw ArgumentError("interpolation needs at least 2 steps");
  const auto net = GeneratorNet::prepare(theta_g, arch);
  std::vector<Tensor> frames;
  frames.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    frames.push_back(generator_trace(net, lerp(z1, z2, t)).output());
  }
  return frames;
}

}  // namespace dcgan
