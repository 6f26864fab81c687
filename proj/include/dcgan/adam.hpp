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

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "dcgan/error.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

struct AdamHyper {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

/// Moment accumulators for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  static AdamState fresh(const Shape& shape, AdamHyper hyper) {
    return AdamState{Tensor::zeros(shape), Tensor::zeros(shape), 0, hyper};
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// In-place Adam update with bias correction:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_update(Tensor& param, const Tensor& grad, AdamState& state) {
  if (param.shape() != grad.shape() || state.m.shape() != param.shape() ||
      state.v.shape() != param.shape()) {
    throw ShapeError("adam_step: param " + param.shape().to_string() +
                     ", grad " + grad.shape().to_string() + ", state " +
                     state.m.shape().to_string());
  }
  for (double g : grad.data()) {
    if (!std::isfinite(g)) throw DivergenceError("adam_step: non-finite gradient");
  }
  const AdamHyper& h = state.hyper;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(h.beta1, t);
  const double correction2 = 1.0 - std::pow(h.beta2, t);

  auto p = param.mutable_data();
  auto m = state.m.mutable_data();
  auto v = state.v.mutable_data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
}

inline std::pair<Tensor, AdamState> adam_step(const Tensor& param,
                                              const Tensor& grad,
                                              AdamState state) {
  Tensor updated = param;
  adam_update(updated, grad, state);
  return {std::move(updated), std::move(state)};
}

}  // namespace dcgan
