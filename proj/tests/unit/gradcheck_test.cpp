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

#include "dcgan/gradcheck.hpp"

namespace dcgan {
namespace {

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(relative_error(1e-12, 0.0), 1e-12 / kGradCheckFloor);
}

// A deliberately wrong analytic gradient must be caught.
TEST(GradCheck, DetectsWrongGradient) {
  Tensor x(Shape{3}, {0.3, -1.2, 2.0});
  auto f = [&] { return x[0] * x[0] + 3.0 * x[1] + x[2] * x[1]; };
  const Tensor right(Shape{3}, {0.6, 3.0 + 2.0, -1.2});
  const Tensor wrong(Shape{3}, {0.6, 3.0, -1.2});
  EXPECT_LT(max_fd_error(x, right, f), 1e-8);
  EXPECT_GT(max_fd_error(x, wrong, f), 0.1);
  EXPECT_EQ(x.values(), (std::vector<double>{0.3, -1.2, 2.0}));
}

TEST(GradCheck, FullSuiteWithinTolerance) {
  const auto results = run_gradcheck_suite({1, 2, 3, 4, 5});
  EXPECT_GE(results.size(), 15u);
  for (const auto& r : results) {
    EXPECT_GT(r.checked, 0u) << r.name;
    EXPECT_LT(r.max_rel_error, kGradCheckTolerance) << r.name;
  }
}

}  // namespace
}  // namespace dcgan
