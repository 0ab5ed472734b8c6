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

#ifndef TOKENSCALE_ALLOCATOR_H_
#define TOKENSCALE_ALLOCATOR_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tokenscale/flops_model.h"
#include "tokenscale/scaling_law.h"

namespace tokenscale {

// Compression targets used for the 576-token CLIP grid.
inline const std::vector<std::int64_t> kDefaultTokenGrid = {1,  4,   16, 36,
                                                            64, 144, 576};

struct AllocationProblem {
  ScalingLaw law;
  double budget = 0.0;  // FLOPs
  std::int64_t text_tokens = 0;
  std::int64_t gen_tokens = 0;
  bool cached = false;
  std::vector<std::int64_t> token_grid = kDefaultTokenGrid;
  std::int64_t v_min = 1;
  std::int64_t v_max = 576;
  double flops_per_param_token = kDefaultFlopsPerParamToken;
  // A grid entry is feasible only if its induced N (billions) exceeds this.
  double min_llm_params_b = 0.0;

  // Tokens other than visual ones that the LLM processes.
  std::int64_t EffectiveTextTokens() const {
    return (cached ? 0 : text_tokens) + gen_tokens;
  }
};

// Throws ValidationError on an unsorted or out-of-bounds grid, bad bounds or
// a nonpositive budget.
void Validate(const AllocationProblem& problem);

struct Allocation {
  double visual_tokens = 0.0;
  double llm_params_b = 0.0;
  double predicted_error = 0.0;
  double flops = 0.0;
};

// Minimizer of h(V) = (q_eff + V)^alpha * V^-beta on [v_min, v_max], which is
// what the law reduces to once N is set by the budget. Independent of the
// budget and of k. alpha > beta gives beta*q_eff/(alpha-beta) clamped;
// alpha <= beta gives v_max. Throws FlatLawError when h is constant
// (alpha == beta with q_eff == 0, or alpha == beta == 0).
double OptimalTokensContinuous(const ScalingLaw& law, double q_eff,
                               double v_min, double v_max);

// Brute force over the token grid. For each V the whole budget goes to the
// LLM: N = C / (k (q_eff + V)), and the law is evaluated at (N, V). Ties go
// to the smaller V. Throws InfeasibleBudgetError if no grid entry is
// feasible.
Allocation OptimalAllocationDiscrete(const AllocationProblem& problem);

// Replaces the continuous N with the largest family member not exceeding it
// and re-evaluates error and FLOPs. Throws InfeasibleBudgetError when every
// member is too large.
Allocation SnapToFamily(const Allocation& allocation,
                        const AllocationProblem& problem,
                        std::span<const double> family_params_b);

struct ParetoPoint {
  double flops = 0.0;  // the budget
  double best_error = 0.0;
  Allocation best_allocation;
};

struct SkippedBudget {
  double budget = 0.0;
  std::string reason;
};

struct ParetoFrontier {
  std::vector<ParetoPoint> points;
  std::vector<SkippedBudget> skipped;
};

// One point per feasible budget (ascending order required). best_error is
// kept nonincreasing: a point that would regress inherits the previous
// allocation, which still fits the larger budget.
ParetoFrontier ComputeParetoFrontier(std::span<const double> budgets,
                                     const AllocationProblem& problem_template);

struct SweepRow {
  std::int64_t q = 0;
  double v_continuous = 0.0;
  Allocation discrete;
};

// For each text token count Q (uncached unless the template says otherwise)
// reports the closed-form and grid optima under the template's budget.
std::vector<SweepRow> TokenVsQSweep(std::span<const std::int64_t> q_values,
                                    const AllocationProblem& problem_template);

// CSV header: q,v_continuous,v_discrete,n_billions,pred_error,flops
void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows);

// CSV header: budget,v_discrete,n_billions,pred_error,flops
void WriteFrontierCsv(std::ostream& out, const ParetoFrontier& frontier);

}  // namespace tokenscale

#endif  // TOKENSCALE_ALLOCATOR_H_
