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

#ifndef TOKENSCALE_SCALING_LAW_H_
#define TOKENSCALE_SCALING_LAW_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tokenscale/benchmark_data.h"

namespace tokenscale {

// error(N, T) = scale * N^-alpha * T^-beta + d, with N in billions.
//
// The two normalizing constants of the usual form only ever appear as a
// product, so they are stored as a single `scale`.
struct ScalingLaw {
  double alpha = 0.0;  // LLM quality exponent
  double beta = 0.0;   // visual token quality exponent
  double scale = 0.0;
  double d = 0.0;  // irreducible error

  static constexpr std::string_view kParamsUnit = "billions";

  bool operator==(const ScalingLaw&) const = default;
};

// Throws ValidationError unless every field is finite and nonnegative.
void Validate(const ScalingLaw& law);

// Throws DomainError for N <= 0 or T <= 0.
double Evaluate(const ScalingLaw& law, double llm_params_b, double tokens);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FitGrid {
  Interval alpha{0.0, 0.1};
  Interval beta{0.0, 0.1};
  Interval scale{0.0, 1.0};
  Interval d{0.0, 1.0};
  int points_per_axis = 21;
  int refine_rounds = 3;
  double shrink_factor = 4.0;
};

void Validate(const FitGrid& grid);

struct FitResult {
  ScalingLaw law;
  double fit_loss = 0.0;  // MSE over the fit points
  std::int64_t n_points = 0;
  // Spacing of the last grid searched, ordered alpha, beta, scale, d.
  std::array<double, 4> final_step{};
};

// Mean squared error of `law` against `points`.
double MeanSquaredError(const ScalingLaw& law,
                        std::span<const AggregatedPoint> points);

// Exhaustive search of the 4-D grid followed by `refine_rounds` re-grids
// centred on the incumbent, each shrinking every range by `shrink_factor`
// and clipping it to the original range. Ties go to the lexicographically
// smallest (alpha, beta, scale, d). The candidate scan runs under OpenMP; the
// result does not depend on the thread count.
//
// Requires at least 5 points spanning two distinct N and two distinct T,
// otherwise throws UnderdeterminedFitError.
FitResult FitGridSearch(std::span<const AggregatedPoint> points,
                        const FitGrid& grid = {});

// Single-threaded reference for FitGridSearch. Same arithmetic, same result.
FitResult FitGridSearchSerial(std::span<const AggregatedPoint> points,
                              const FitGrid& grid = {});

// max |Evaluate(law, N, T) - error| over the holdout set.
double ExtrapolationError(const FitResult& result,
                          std::span<const AggregatedPoint> holdout);

// Flat `key=value` document: alpha, beta, scale, d, fit_loss, n_points,
// params_unit. Doubles are printed in shortest round-trip form.
std::string SerializeFitResult(const FitResult& result);

// Accepts documents written by SerializeFitResult as well as hand-written
// laws carrying only alpha, beta, scale and d. Throws ParseError.
FitResult ParseFitResult(std::string_view text);

}  // namespace tokenscale

#endif  // TOKENSCALE_SCALING_LAW_H_
