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

// Brute-force reference implementations used as independent oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "dcgan/rng.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double sd = 1.0) {
  RngStream rng = RngStream::derive(seed, {99, shape.element_count()});
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.mutable_data()) v = sd * rng.normal();
  return t;
}

// Zero-padded (1 px) 3x3 cross-correlation, written from the definition.
inline Tensor naive_conv(const Tensor& x, const Tensor& w, std::size_t stride) {
  const std::size_t h = x.dim(0), wd = x.dim(1), ci = x.dim(2), co = w.dim(3);
  const std::size_t oh = (h + stride - 1) / stride, ow = (wd + stride - 1) / stride;
  Tensor y = Tensor::zeros(Shape{oh, ow, co});
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t o = 0; o < co; ++o) {
        double s = 0.0;
        for (std::size_t ky = 0; ky < 3; ++ky)
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const long iy = static_cast<long>(oy * stride + ky) - 1;
            const long ix = static_cast<long>(ox * stride + kx) - 1;
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd))
              continue;
            for (std::size_t c = 0; c < ci; ++c)
              s += x.at({std::size_t(iy), std::size_t(ix), c}) * w.at({ky, kx, c, o});
          }
        y.mutable_data()[(oy * ow + ox) * co + o] = s;
      }
  return y;
}

// Transposed convolution as an explicit scatter: each input pixel adds its
// kernel footprint into an output of size h*stride.
inline Tensor naive_transposed_conv(const Tensor& x, const Tensor& w, std::size_t stride) {
  const std::size_t h = x.dim(0), wd = x.dim(1), ci = x.dim(2), co = w.dim(3);
  const std::size_t oh = h * stride, ow = wd * stride;
  Tensor y = Tensor::zeros(Shape{oh, ow, co});
  for (std::size_t iy = 0; iy < h; ++iy)
    for (std::size_t ix = 0; ix < wd; ++ix)
      for (std::size_t ky = 0; ky < 3; ++ky)
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const long oy = static_cast<long>(iy * stride + ky) - 1;
          const long ox = static_cast<long>(ix * stride + kx) - 1;
          if (oy < 0 || ox < 0 || oy >= static_cast<long>(oh) || ox >= static_cast<long>(ow))
            continue;
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t o = 0; o < co; ++o)
              y.mutable_data()[(std::size_t(oy) * ow + std::size_t(ox)) * co + o] +=
                  x.at({iy, ix, c}) * w.at({ky, kx, c, o});
        }
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace dcgan::testing
