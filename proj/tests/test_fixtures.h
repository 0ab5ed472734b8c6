// Copyright 2026 The tokenscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TOKENSCALE_TESTS_TEST_FIXTURES_H_
#define TOKENSCALE_TESTS_TEST_FIXTURES_H_

#include <cstdint>
#include <random>
#include <vector>

#include "tokenscale/benchmark_data.h"
#include "tokenscale/scaling_law.h"

namespace tokenscale::testing {

// Published exponents: visual reasoning, OCR, and the two PruMerge fits.
inline constexpr ScalingLaw kVisualReasoningLaw{0.077, 0.015, 1.0, 0.0};
inline constexpr ScalingLaw kOcrLaw{0.029, 0.048, 1.0, 0.0};
inline constexpr ScalingLaw kPruMergeSharedLaw{0.069, 0.008, 1.0, 0.0};
inline constexpr ScalingLaw kPruMergeScratchLaw{0.077, 0.041, 1.0, 0.0};

// Ground truth for the synthetic recovery experiments.
inline constexpr ScalingLaw kSyntheticTruth{0.077, 0.015, 0.74, 0.2};

inline const std::vector<double> kFitSizes = {0.5, 1.8, 4, 7};
inline const std::vector<std::int64_t> kFitTokens = {1, 4, 16, 36, 64, 144, 576};

inline std::vector<AggregatedPoint> SyntheticPoints(
    const ScalingLaw& law, const std::vector<double>& sizes,
    double noise_sigma = 0.0, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
  std::vector<AggregatedPoint> points;
  for (double n : sizes) {
    for (std::int64_t t : kFitTokens) {
      double y = Evaluate(law, n, static_cast<double>(t));
      if (noise_sigma > 0) y += noise(rng);
      points.push_back({n, t, y, 1});
    }
  }
  return points;
}

}  // namespace tokenscale::testing

#endif  // TOKENSCALE_TESTS_TEST_FIXTURES_H_
