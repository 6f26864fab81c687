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
#include <vector>

#include "dcgan/error.hpp"
#include "dcgan/layers.hpp"
#include "dcgan/loss.hpp"

namespace dcgan {
namespace {

const double kLn2 = std::log(2.0);

TEST(Loss, UniformHalfIdentities) {
  const std::vector<double> half(7, 0.5), half_real(3, 0.5);
  EXPECT_NEAR(loss_d(half, half_real), 2 * kLn2, 1e-12);
  EXPECT_NEAR(loss_g(half), -kLn2, 1e-12);
  const std::vector<double> zero_logits(7, 0.0), zero_real(3, 0.0);
  EXPECT_NEAR(loss_d_from_logits(zero_logits, zero_real), 2 * kLn2, 1e-12);
  EXPECT_NEAR(loss_g_from_logits(zero_logits), -kLn2, 1e-12);
}

TEST(Loss, HandComputedValues) {
  EXPECT_NEAR(loss_d(std::vector<double>{0.8}, std::vector<double>{0.9}),
              -std::log(0.2) - std::log(0.9), 1e-12);
  EXPECT_NEAR(loss_d(std::vector<double>{0.8}, std::vector<double>{0.9}), 1.714798, 1e-6);
  EXPECT_NEAR(loss_g(std::vector<double>{0.25, 0.75}), -0.836988, 1e-6);
}

TEST(Loss, PerfectDiscriminatorLimit) {
  EXPECT_LT(loss_d_from_logits(std::vector<double>{-25.0}, std::vector<double>{25.0}), 1e-10);
}

TEST(Loss, LogitFormsMatchProbabilityForms) {
  const std::vector<double> fl = {-1.3, 0.2, 2.5}, rl = {0.7, -0.4};
  std::vector<double> fp, rp;
  for (double l : fl) fp.push_back(sigmoid(l));
  for (double l : rl) rp.push_back(sigmoid(l));
  EXPECT_NEAR(loss_d_from_logits(fl, rl), loss_d(fp, rp), 1e-12);
  EXPECT_NEAR(loss_g_from_logits(fl), loss_g(fp), 1e-12);
}

TEST(Loss, FakeTermAntisymmetryIsExact) {
  const std::vector<double> fl = {-3.1, 0.0, 0.4, 7.7, 31.0};
  EXPECT_EQ(loss_g_from_logits(fl) + fake_term_from_logits(fl), 0.0);
  const std::vector<double> rl = {1.0, -0.5};
  EXPECT_EQ(loss_d_from_logits(fl, rl), fake_term_from_logits(fl) + real_term_from_logits(rl));
  EXPECT_EQ(loss_d_from_logits(fl, rl), -loss_g_from_logits(fl) + real_term_from_logits(rl));
}

TEST(Loss, ClampKeepsLossesFinite) {
  const std::vector<double> huge = {1e6}, tiny = {-1e6};
  EXPECT_TRUE(std::isfinite(loss_g_from_logits(huge)));
  EXPECT_NEAR(loss_g_from_logits(huge), -(kLogitClamp + std::log1p(std::exp(-kLogitClamp))), 1e-12);
  EXPECT_TRUE(std::isfinite(loss_d_from_logits(huge, tiny)));
}

TEST(Loss, GradientsAtHalf) {
  EXPECT_EQ(loss_d_fake_grad(0.0, 4), 0.125);
  EXPECT_EQ(loss_d_real_grad(0.0, 2), -0.25);
  EXPECT_EQ(loss_g_grad(0.0, 4), -0.125);
}

TEST(Loss, Errors) {
  EXPECT_THROW(loss_d(std::vector<double>{}, std::vector<double>{0.5}), ArgumentError);
  EXPECT_THROW(loss_d(std::vector<double>{0.5}, std::vector<double>{}), ArgumentError);
  EXPECT_THROW(loss_g(std::vector<double>{}), ArgumentError);
  EXPECT_THROW(loss_g(std::vector<double>{1.0}), ArgumentError);
  EXPECT_THROW(loss_g_from_logits(std::vector<double>{}), ArgumentError);
}

}  // namespace
}  // namespace dcgan
