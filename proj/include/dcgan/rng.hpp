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
#include <initializer_list>
#include <random>
#include <vector>

namespace dcgan {

/// Purposes a substream can be derived for. Values are part of the
/// reproducibility contract; do not renumber.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kLatent = 2,
  kRealIndex = 3,
  kRealNoise = 4,
  kFakeNoise = 5,
  kSynthetic = 6,
  kSample = 7,
  kGradCheck = 8,
  kFakeNoiseSecondPass = 9,
};

/// Explicit random stream. Never global: every consumer receives one by
/// reference, and substreams are derived from (seed, path...) so results do
/// not depend on evaluation order.
///
/// The engine is std::mt19937_64; the uniform and normal transforms are
/// written out here because the std distributions are implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Substream keyed by a seed and an arbitrary path of integers.
  static RngStream derive(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (path.size() + 1));
    auto push = [&words](std::uint64_t v) {
      words.push_back(static_cast<std::uint32_t>(v));
      words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto p : path) push(p);
    std::seed_seq seq(words.begin(), words.end());
    RngStream s(0);
    s.engine_.seed(seq);
    return s;
  }

  static RngStream derive(std::uint64_t seed, std::uint64_t iteration,
                          StreamTag tag, std::uint64_t index = 0) {
    return derive(seed, {iteration, static_cast<std::uint64_t>(tag), index});
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Marsaglia's polar method; the second variate of
  /// each accepted pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    has_cached_ = true;
    return u * f;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace dcgan
