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

// Adversarial cross-entropy losses.
//
//   L_D = -(1/n) sum_fake log(1 - p) - (1/m) sum_real log(p)
//   L_G = +(1/n) sum_fake log(1 - p)
//
// With p = sigmoid(l): log(p) = -softplus(-l) and log(1 - p) = -softplus(l),
// so both losses are evaluated from logits without forming p. Logits are
// clamped to [-30, 30] first; gradients are taken at the clamped value.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "dcgan/error.hpp"
#include "dcgan/layers.hpp"

namespace dcgan {

inline constexpr double kLogitClamp = 30.0;

inline double clamp_logit(double logit) {
  return std::clamp(logit, -kLogitClamp, kLogitClamp);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace detail {

inline void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) throw ArgumentError(std::string(what) + " must be nonempty");
}

inline void require_probabilities(std::span<const double> ps) {
  for (double p : ps) {
    if (!(p > 0.0 && p < 1.0)) {
      throw ArgumentError("probabilities must lie in (0,1)");
    }
  }
}

}  // namespace detail

/// (1/n) sum softplus(l) = -(1/n) sum log(1 - p) over fakes. This is the
/// first term of L_D and exactly -L_G.
inline double fake_term_from_logits(std::span<const double> fake_logits) {
  detail::require_nonempty(fake_logits, "fake batch");
  double s = 0.0;
  for (double l : fake_logits) s += softplus(clamp_logit(l));
  return s / static_cast<double>(fake_logits.size());
}

/// -(1/m) sum log(p) over reals.
inline double real_term_from_logits(std::span<const double> real_logits) {
  detail::require_nonempty(real_logits, "real batch");
  double s = 0.0;
  for (double l : real_logits) s += softplus(-clamp_logit(l));
  return s / static_cast<double>(real_logits.size());
}

inline double loss_d_from_logits(std::span<const double> fake_logits,
                                 std::span<const double> real_logits) {
  return fake_term_from_logits(fake_logits) + real_term_from_logits(real_logits);
}

inline double loss_g_from_logits(std::span<const double> fake_logits) {
  return -fake_term_from_logits(fake_logits);
}

/// Probability-space forms, for callers that only hold p.
inline double fake_term(std::span<const double> fake_ps) {
  detail::require_nonempty(fake_ps, "fake batch");
  detail::require_probabilities(fake_ps);
  double s = 0.0;
  for (double p : fake_ps) s -= std::log1p(-p);
  return s / static_cast<double>(fake_ps.size());
}

inline double loss_d(std::span<const double> fake_ps,
                     std::span<const double> real_ps) {
  detail::require_nonempty(real_ps, "real batch");
  detail::require_probabilities(real_ps);
  double s = 0.0;
  for (double p : real_ps) s -= std::log(p);
  return fake_term(fake_ps) + s / static_cast<double>(real_ps.size());
}

inline double loss_g(std::span<const double> fake_ps) { return -fake_term(fake_ps); }

/// dL_D/dl for one fake example in a batch of n.
inline double loss_d_fake_grad(double logit, std::size_t n) {
  return sigmoid(clamp_logit(logit)) / static_cast<double>(n);
}

/// dL_D/dl for one real example in a batch of m: -(1 - sigmoid(l)) / m.
inline double loss_d_real_grad(double logit, std::size_t m) {
  return -sigmoid(-clamp_logit(logit)) / static_cast<double>(m);
}

/// dL_G/dl for one fake example; the negation of loss_d_fake_grad.
inline double loss_g_grad(double logit, std::size_t n) {
  return -loss_d_fake_grad(logit, n);
}

}  // namespace dcgan
