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
#include "oracles.hpp"

namespace dcgan {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

ConvKernel delta_kernel(std::size_t channels, std::size_t stride, ConvMode mode) {
  Tensor w = Tensor::zeros(Shape{3, 3, channels, channels});
  for (std::size_t c = 0; c < channels; ++c) {
    w.mutable_data()[((1 * 3 + 1) * channels + c) * channels + c] = 1.0;
  }
  return {w, Tensor::zeros(Shape{channels}), stride, mode};
}

ConvKernel random_kernel(std::size_t in, std::size_t out, std::size_t stride,
                         ConvMode mode, std::uint64_t seed) {
  return {random_tensor(Shape{3, 3, in, out}, seed), random_tensor(Shape{out}, seed + 1),
          stride, mode};
}

TEST(FullyConnected, Identity) {
  const Tensor y = fully_connected(Tensor(Shape{2}, {1, 0}), Tensor(Shape{2, 2}, {1, 0, 0, 1}),
                                   Tensor::zeros(Shape{2}));
  EXPECT_EQ(y.values(), (std::vector<double>{1, 0}));
}

TEST(FullyConnected, GeneratorWidth) {
  const Tensor y = fully_connected(random_tensor(Shape{25}, 1), random_tensor(Shape{25, 256}, 2),
                                   Tensor::zeros(Shape{256}));
  EXPECT_EQ(y.shape(), Shape({256}));
}

TEST(FullyConnected, HandComputed) {
  const Tensor y = fully_connected(Tensor(Shape{2}, {1, 2}), Tensor(Shape{2, 2}, {1, 1, 1, -1}),
                                   Tensor(Shape{2}, {0.5, 0.5}));
  EXPECT_EQ(y.values(), (std::vector<double>{3.5, -0.5}));
}

TEST(FullyConnected, ShapeMismatchThrows) {
  EXPECT_THROW(fully_connected(Tensor::zeros(Shape{3}), Tensor::zeros(Shape{2, 2}),
                               Tensor::zeros(Shape{2})),
               ShapeError);
}

TEST(FullyConnected, ZeroUpstreamGivesZeroGrads) {
  const Tensor x = random_tensor(Shape{4}, 3), w = random_tensor(Shape{4, 3}, 4);
  Tensor gw = Tensor::zeros(w.shape()), gb = Tensor::zeros(Shape{3});
  const Tensor gx = fully_connected_backward(x, w, Tensor::zeros(Shape{3}), gw, gb);
  EXPECT_EQ(gx, Tensor::zeros(Shape{4}));
  EXPECT_EQ(gw, Tensor::zeros(w.shape()));
  EXPECT_EQ(gb, Tensor::zeros(Shape{3}));
}

TEST(Conv2d, DeltaKernelCopiesInput) {
  const Tensor x = random_tensor(Shape{5, 6, 3}, 5);
  EXPECT_EQ(conv2d(x, delta_kernel(3, 1, ConvMode::kConv)), x);
}

TEST(Conv2d, DiscriminatorFirstLayerShape) {
  const Tensor y = conv2d(random_tensor(Shape{16, 16, 3}, 6),
                          random_kernel(3, 32, 1, ConvMode::kConv, 7));
  EXPECT_EQ(y.shape(), Shape({16, 16, 32}));
}

TEST(Conv2d, StrideTwoHalves) {
  EXPECT_EQ(conv2d(random_tensor(Shape{16, 16, 32}, 8),
                   random_kernel(32, 64, 2, ConvMode::kConv, 9)).shape(),
            Shape({8, 8, 64}));
  EXPECT_EQ(conv2d(random_tensor(Shape{8, 8, 64}, 10),
                   random_kernel(64, 128, 2, ConvMode::kConv, 11)).shape(),
            Shape({4, 4, 128}));
}

TEST(Conv2d, AllOnesKernelOnTwoByTwo) {
  const Tensor x(Shape{2, 2, 1}, {1, 2, 3, 4});
  const ConvKernel k{Tensor::filled(Shape{3, 3, 1, 1}, 1.0), Tensor::zeros(Shape{1}), 1,
                     ConvMode::kConv};
  EXPECT_EQ(conv2d(x, k).values(), (std::vector<double>{10, 10, 10, 10}));
}

TEST(Conv2d, MatchesBruteForce) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Tensor x = random_tensor(Shape{6, 6, 5}, seed);
      ConvKernel k = random_kernel(5, 7, stride, ConvMode::kConv, seed + 50);
      k.bias = Tensor::zeros(Shape{7});
      EXPECT_LT(max_abs_diff(conv2d(x, k), testing::naive_conv(x, k.weights, stride)), 1e-12);
    }
  }
}

TEST(Conv2d, RejectsNonImageInput) {
  EXPECT_THROW(conv2d(Tensor::zeros(Shape{16, 16}), random_kernel(1, 1, 1, ConvMode::kConv, 1)),
               ShapeError);
}

TEST(ConvKernel, RejectsBadStride) {
  ConvKernel k = random_kernel(2, 2, 3, ConvMode::kConv, 1);
  EXPECT_THROW(conv2d(random_tensor(Shape{4, 4, 2}, 2), k), ArgumentError);
}

TEST(TransposedConv2d, GeneratorShapes) {
  EXPECT_EQ(transposed_conv2d(random_tensor(Shape{4, 4, 16}, 1),
                              random_kernel(16, 32, 2, ConvMode::kTransposed, 2)).shape(),
            Shape({8, 8, 32}));
  EXPECT_EQ(transposed_conv2d(random_tensor(Shape{8, 8, 32}, 3),
                              random_kernel(32, 16, 2, ConvMode::kTransposed, 4)).shape(),
            Shape({16, 16, 16}));
  EXPECT_EQ(transposed_conv2d(random_tensor(Shape{16, 16, 16}, 5),
                              random_kernel(16, 3, 1, ConvMode::kTransposed, 6)).shape(),
            Shape({16, 16, 3}));
}

TEST(TransposedConv2d, StrideOneDeltaIsIdentity) {
  const Tensor x = random_tensor(Shape{4, 5, 2}, 7);
  EXPECT_EQ(transposed_conv2d(x, delta_kernel(2, 1, ConvMode::kTransposed)), x);
}

TEST(TransposedConv2d, MatchesScatterOracle) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Tensor x = random_tensor(Shape{4, 4, 3}, seed);
      ConvKernel k = random_kernel(3, 5, stride, ConvMode::kTransposed, seed + 70);
      k.bias = Tensor::zeros(Shape{5});
      EXPECT_LT(max_abs_diff(transposed_conv2d(x, k),
                             testing::naive_transposed_conv(x, k.weights, stride)),
                1e-12);
    }
  }
}

// <conv(x, W), y> = <x, convT(y, swap(W))> on brute-force inner products.
TEST(TransposedConv2d, IsAdjointOfConv) {
  for (std::size_t stride : {1u, 2u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Tensor x = random_tensor(Shape{4, 4, 3}, seed);
      const Tensor w = random_tensor(Shape{3, 3, 3, 4}, seed + 10);
      const Tensor y = random_tensor(Shape{4 / stride, 4 / stride, 4}, seed + 20);
      const ConvKernel kc{w, Tensor::zeros(Shape{4}), stride, ConvMode::kConv};
      const ConvKernel kt{swap_channels(w), Tensor::zeros(Shape{3}), stride,
                          ConvMode::kTransposed};
      const double lhs = dot(conv2d(x, kc), y);
      const double rhs = dot(x, transposed_conv2d(y, kt));
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

// The input gradient of each conv flavour is the forward of the other.
TEST(ConvBackward, InputGradIsOtherForward) {
  for (std::size_t stride : {1u, 2u}) {
    const Tensor x = random_tensor(Shape{4, 4, 3}, 31);
    const ConvKernel kc = random_kernel(3, 4, stride, ConvMode::kConv, 32);
    const Tensor gy = random_tensor(Shape{4 / stride, 4 / stride, 4}, 33);
    const ConvKernel kt{swap_channels(kc.weights), Tensor::zeros(Shape{3}), stride,
                        ConvMode::kTransposed};
    EXPECT_LT(max_abs_diff(conv2d_backward(x, kc, gy).input, transposed_conv2d(gy, kt)), 1e-12);

    const Tensor xt = random_tensor(Shape{2, 2, 4}, 34);
    const ConvKernel kt2 = random_kernel(4, 3, stride, ConvMode::kTransposed, 35);
    const Tensor gyt = random_tensor(Shape{2 * stride, 2 * stride, 3}, 36);
    const ConvKernel kc2{swap_channels(kt2.weights), Tensor::zeros(Shape{4}), stride,
                         ConvMode::kConv};
    EXPECT_LT(max_abs_diff(transposed_conv2d_backward(xt, kt2, gyt).input, conv2d(gyt, kc2)),
              1e-12);
  }
}

TEST(ConvBackward, ZeroUpstreamGivesZeroGrads) {
  const Tensor x = random_tensor(Shape{4, 4, 2}, 1);
  const ConvKernel k = random_kernel(2, 3, 2, ConvMode::kConv, 2);
  const ConvGrads g = conv2d_backward(x, k, Tensor::zeros(Shape{2, 2, 3}));
  EXPECT_EQ(g.input, Tensor::zeros(x.shape()));
  EXPECT_EQ(g.weights, Tensor::zeros(k.weights.shape()));
  EXPECT_EQ(g.bias, Tensor::zeros(Shape{3}));
}

TEST(ConvBackward, UpstreamShapeMismatchThrows) {
  const Tensor x = random_tensor(Shape{4, 4, 2}, 1);
  const ConvKernel k = random_kernel(2, 3, 1, ConvMode::kConv, 2);
  EXPECT_THROW(conv2d_backward(x, k, Tensor::zeros(Shape{2, 2, 3})), ShapeError);
}

TEST(LeakyRelu, Values) {
  const Tensor y = leaky_relu(Tensor(Shape{3}, {-2, 3, 0}), 0.1);
  EXPECT_DOUBLE_EQ(y[0], -0.2);
  EXPECT_EQ(y[1], 3.0);
  EXPECT_EQ(leaky_relu(Tensor(Shape{1}, {3}), 0.0)[0], 3.0);
}

TEST(LeakyRelu, GradientMatchesFiniteDifference) {
  const double h = 1e-5;
  for (double x : {-1.0, 1.0}) {
    const double fd = (leaky_relu(Tensor(Shape{1}, {x + h}), 0.1)[0] -
                       leaky_relu(Tensor(Shape{1}, {x - h}), 0.1)[0]) / (2 * h);
    const double an = leaky_relu_backward(Tensor(Shape{1}, {x}), 0.1, Tensor(Shape{1}, {1.0}))[0];
    EXPECT_NEAR(an, x < 0 ? 0.1 : 1.0, 1e-15);
    EXPECT_NEAR(fd, an, 1e-9);
  }
}

TEST(LeakyRelu, RejectsAlphaOutsideUnitInterval) {
  EXPECT_THROW(leaky_relu(Tensor::zeros(Shape{1}), 1.0), ArgumentError);
  EXPECT_THROW(leaky_relu(Tensor::zeros(Shape{1}), -0.1), ArgumentError);
}

TEST(Relu, Values) {
  EXPECT_EQ(relu(Tensor(Shape{3}, {-1, 0, 2})).values(), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(relu(Tensor::filled(Shape{4, 4}, -3.0)), Tensor::zeros(Shape{4, 4}));
}

TEST(Relu, GradientMaskIsIndicator) {
  const Tensor x(Shape{4}, {-1.5, 0.3, -0.2, 2.0});
  const Tensor g = relu_backward(x, Tensor::filled(Shape{4}, 1.0));
  EXPECT_EQ(g.values(), (std::vector<double>{0, 1, 0, 1}));
  const double h = 1e-5;
  for (std::size_t i = 0; i < 4; ++i) {
    Tensor up = x, down = x;
    up.mutable_data()[i] += h;
    down.mutable_data()[i] -= h;
    EXPECT_NEAR((reduce_sum(relu(up)) - reduce_sum(relu(down))) / (2 * h), g[i], 1e-9);
  }
}

TEST(GlobalAvgPool, Values) {
  const Tensor pooled = global_avg_pool(Tensor::filled(Shape{3, 3, 2}, 0.7));
  for (double v : pooled.data()) {
    EXPECT_NEAR(v, 0.7, 1e-15);
  }
  EXPECT_EQ(global_avg_pool(random_tensor(Shape{4, 4, 128}, 1)).shape(), Shape({1, 1, 128}));
  EXPECT_EQ(global_avg_pool(Tensor(Shape{2, 2, 1}, {1, 2, 3, 4}))[0], 2.5);
}

TEST(GaussianNoise, IdentityCases) {
  const Tensor x = random_tensor(Shape{4, 4, 2}, 1);
  RngStream rng(1);
  EXPECT_EQ(gaussian_noise(x, 0.0, rng, true), x);
  EXPECT_EQ(gaussian_noise(x, 5.0, rng, false), x);
}

TEST(GaussianNoise, SampleStdAtDefaultSigma) {
  RngStream rng = RngStream::derive(123, 0, StreamTag::kGradCheck);
  const NoiseConfig cfg;
  const Tensor y = gaussian_noise(Tensor::zeros(Shape{1000000}), cfg.sigma, rng, true);
  const double mean = reduce_mean(y);
  double ss = 0;
  for (double v : y.data()) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
  EXPECT_GE(sd, 0.705);
  EXPECT_LE(sd, 0.710);
  EXPECT_NEAR(cfg.sigma * cfg.sigma, 0.5, 1e-15);
}

TEST(GaussianNoise, DeterministicForSameStream) {
  const Tensor x = random_tensor(Shape{4, 4, 2}, 1);
  RngStream a(77), b(77);
  EXPECT_EQ(gaussian_noise(x, 0.7, a, true), gaussian_noise(x, 0.7, b, true));
}

TEST(Dropout, IdentityCases) {
  const Tensor x = random_tensor(Shape{128}, 1);
  RngStream rng(2);
  EXPECT_EQ(dropout(x, 0.0, rng, true), x);
  EXPECT_EQ(dropout(x, 0.5, rng, false), x);
}

TEST(Dropout, InvertedScalingPreservesMean) {
  RngStream rng(3);
  double total = 0.0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) total += dropout(Tensor(Shape{1}, {2.0}), 0.5, rng, true)[0];
  EXPECT_NEAR(total / trials, 2.0, 0.02);
}

TEST(Dropout, MaskValues) {
  RngStream rng(4);
  const Tensor m = dropout_mask(Shape{1000}, 0.25, rng);
  for (double v : m.data()) EXPECT_TRUE(v == 0.0 || v == 1.0 / 0.75);
  EXPECT_THROW(dropout_mask(Shape{1}, 1.0, rng), ArgumentError);
}

TEST(Sigmoid, Values) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 0.880797, 1e-6);
  double prev = 0.0;
  for (double x = -30; x <= 30; x += 0.5) {
    const double s = sigmoid(x);
    EXPECT_GT(s, prev);
    EXPECT_NEAR(sigmoid(-x), 1.0 - s, 1e-15);
    prev = s;
  }
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
}

}  // namespace
}  // namespace dcgan
