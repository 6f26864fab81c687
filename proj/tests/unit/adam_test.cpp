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

#include <gtest/gtest.h>

#include <cmath>

#include "dcgan/adam.hpp"
#include "dcgan/error.hpp"

namespace dcgan {
namespace {

TEST(Adam, ZeroGradientLeavesParamUnchanged) {
  const Tensor p(Shape{3}, {0.5, -1.0, 2.0});
  auto [q, s] = adam_step(p, Tensor::zeros(Shape{3}), AdamState::fresh(p.shape(), {}));
  EXPECT_EQ(q, p);
  EXPECT_EQ(s.t, 1u);
}

// Bias correction makes m_hat = v_hat = g on the first step, so the step is
// lr * g / (|g| + eps).
TEST(Adam, FirstStepOracle) {
  const AdamHyper h{0.001, 0.9, 0.999, 1e-8};
  auto [q, s] = adam_step(Tensor::zeros(Shape{1}), Tensor(Shape{1}, {1.0}),
                          AdamState::fresh(Shape{1}, h));
  EXPECT_NEAR(q[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(q[0], -0.001, 1e-9);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  Tensor p = Tensor::zeros(Shape{1});
  AdamState s = AdamState::fresh(Shape{1}, {0.001, 0.9, 0.999, 1e-8});
  double prev = p[0];
  for (int i = 0; i < 2; ++i) {
    adam_update(p, Tensor(Shape{1}, {1.0}), s);
    EXPECT_LT(p[0], prev);
    prev = p[0];
  }
  EXPECT_EQ(s.t, 2u);
}

TEST(Adam, StepSizeIsScaleFree) {
  const AdamHyper h{0.01, 0.9, 0.999, 0.0};
  for (double g : {1e-3, 1.0, 1e3}) {
    Tensor p = Tensor::zeros(Shape{2});
    AdamState s = AdamState::fresh(Shape{2}, h);
    double last_step = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double before = p[0];
      adam_update(p, Tensor(Shape{2}, {g, -g}), s);
      last_step = before - p[0];
    }
    EXPECT_NEAR(last_step, h.lr, 0.05 * h.lr) << "g=" << g;
    EXPECT_NEAR(-p[0], 100 * h.lr, 0.05 * 100 * h.lr) << "g=" << g;
    EXPECT_NEAR(p[1], 100 * h.lr, 0.05 * 100 * h.lr) << "g=" << g;
  }
}

TEST(Adam, SecondMomentNonNegative) {
  Tensor p = Tensor::zeros(Shape{3});
  AdamState s = AdamState::fresh(Shape{3}, {});
  for (int i = 0; i < 10; ++i) adam_update(p, Tensor(Shape{3}, {-3.0, 0.0, 1e-6 * i}), s);
  for (double v : s.v.data()) EXPECT_GE(v, 0.0);
}

TEST(Adam, DefaultsAreDcganConvention) {
  const AdamHyper h;
  EXPECT_EQ(h.lr, 2e-4);
  EXPECT_EQ(h.beta1, 0.5);
  EXPECT_EQ(h.beta2, 0.999);
  EXPECT_EQ(h.epsilon, 1e-8);
}

TEST(Adam, Errors) {
  Tensor p = Tensor::zeros(Shape{2});
  AdamState s = AdamState::fresh(Shape{2}, {});
  EXPECT_THROW(adam_update(p, Tensor::zeros(Shape{3}), s), ShapeError);
  EXPECT_THROW(adam_update(p, Tensor(Shape{2}, {1.0, std::nan("")}), s), DivergenceError);
  EXPECT_THROW(adam_update(p, Tensor(Shape{2}, {INFINITY, 0.0}), s), DivergenceError);
  EXPECT_EQ(s.t, 0u);
  EXPECT_EQ(p, Tensor::zeros(Shape{2}));
}

}  // namespace
}  // namespace dcgan
