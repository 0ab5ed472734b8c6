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

#include "tokenscale/allocator.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "text_util.h"
#include "tokenscale/errors.h"

namespace tokenscale {
namespace {

constexpr double kParamsPerBillion = 1e9;

Allocation AllocateAt(const AllocationProblem& problem, std::int64_t v,
                      double llm_params_b) {
  InferenceConfig config;
  config.llm_params = llm_params_b * kParamsPerBillion;
  config.text_tokens = problem.text_tokens;
  config.visual_tokens = v;
  config.generated_tokens = problem.gen_tokens;
  config.prompt_cached = problem.cached;

  Allocation a;
  a.visual_tokens = static_cast<double>(v);
  a.llm_params_b = llm_params_b;
  a.predicted_error =
      Evaluate(problem.law, llm_params_b, static_cast<double>(v));
  a.flops = InferenceFlops(config, problem.flops_per_param_token);
  return a;
}

}  // namespace

void Validate(const AllocationProblem& problem) {
  Validate(problem.law);
  if (!(problem.budget > 0.0) || !std::isfinite(problem.budget)) {
    throw ValidationError("budget must be positive");
  }
  if (problem.text_tokens < 0 || problem.gen_tokens < 0) {
    throw ValidationError("token counts must be nonnegative");
  }
  if (problem.v_min < 1 || problem.v_min > problem.v_max) {
    throw ValidationError("need 1 <= v_min <= v_max");
  }
  if (problem.token_grid.empty()) throw ValidationError("empty token grid");
  if (!std::is_sorted(problem.token_grid.begin(), problem.token_grid.end())) {
    throw ValidationError("token grid must be ascending");
  }
  if (problem.token_grid.front() < problem.v_min ||
      problem.token_grid.back() > problem.v_max) {
    throw ValidationError("token grid outside [v_min, v_max]");
  }
  if (!(problem.flops_per_param_token > 0.0)) {
    throw ValidationError("flops per param-token must be positive");
  }
  if (!(problem.min_llm_params_b >= 0.0)) {
    throw ValidationError("min_llm_params_b must be >= 0");
  }
}

double OptimalTokensContinuous(const ScalingLaw& law, double q_eff,
                               double v_min, double v_max) {
  Validate(law);
  if (!(v_min >= 1.0) || !(v_min <= v_max) || !(q_eff >= 0.0)) {
    throw ValidationError("need q_eff >= 0 and 1 <= v_min <= v_max");
  }
  if (law.alpha == law.beta && (q_eff == 0.0 || law.alpha == 0.0)) {
    throw FlatLawError("flat law: every visual token count is equivalent");
  }
  if (law.alpha <= law.beta) return v_max;
  const double stationary = law.beta * q_eff / (law.alpha - law.beta);
  return std::clamp(stationary, v_min, v_max);
}

Allocation OptimalAllocationDiscrete(const AllocationProblem& problem) {
  Validate(problem);
  std::optional<Allocation> best;
  for (const std::int64_t v : problem.token_grid) {
    const double n_b =
        MaxParamsUnderBudget(problem.budget, problem.text_tokens, v,
                             problem.gen_tokens, problem.cached,
                             problem.flops_per_param_token) /
        kParamsPerBillion;
    if (!(n_b > problem.min_llm_params_b)) continue;
    const Allocation candidate = AllocateAt(problem, v, n_b);
    if (!best || candidate.predicted_error < best->predicted_error) {
      best = candidate;
    }
  }
  if (!best) {
    throw InfeasibleBudgetError(
        "infeasible budget " + internal::FormatDouble(problem.budget) +
        ": no grid entry leaves N above " +
        internal::FormatDouble(problem.min_llm_params_b) + "B");
  }
  return *best;
}

Allocation SnapToFamily(const Allocation& allocation,
                        const AllocationProblem& problem,
                        std::span<const double> family_params_b) {
  double chosen = -1.0;
  for (const double n : family_params_b) {
    if (n > 0.0 && n <= allocation.llm_params_b && n > chosen) chosen = n;
  }
  if (chosen < 0.0) {
    throw InfeasibleBudgetError("no model family member fits the budget");
  }
  return AllocateAt(problem,
                    static_cast<std::int64_t>(allocation.visual_tokens),
                    chosen);
}

ParetoFrontier ComputeParetoFrontier(
    std::span<const double> budgets,
    const AllocationProblem& problem_template) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw ValidationError("budgets must be ascending");
  }
  ParetoFrontier frontier;
  for (const double budget : budgets) {
    AllocationProblem problem = problem_template;
    problem.budget = budget;
    Allocation a;
    try {
      a = OptimalAllocationDiscrete(problem);
    } catch (const InfeasibleBudgetError& e) {
      frontier.skipped.push_back({budget, e.what()});
      continue;
    }
    if (!frontier.points.empty() &&
        a.predicted_error > frontier.points.back().best_error) {
      a = frontier.points.back().best_allocation;
    }
    frontier.points.push_back({budget, a.predicted_error, a});
  }
  return frontier;
}

std::vector<SweepRow> TokenVsQSweep(std::span<const std::int64_t> q_values,
                                    const AllocationProblem& problem_template) {
  if (q_values.empty()) throw ValidationError("no Q values to sweep");
  std::vector<SweepRow> rows;
  rows.reserve(q_values.size());
  for (const std::int64_t q : q_values) {
    AllocationProblem problem = problem_template;
    problem.text_tokens = q;
    SweepRow row;
    row.q = q;
    row.discrete = OptimalAllocationDiscrete(problem);
    row.v_continuous = OptimalTokensContinuous(
        problem.law, static_cast<double>(problem.EffectiveTextTokens()),
        static_cast<double>(problem.v_min), static_cast<double>(problem.v_max));
    rows.push_back(row);
  }
  return rows;
}

void WriteSweepCsv(std::ostream& out, std::span<const SweepRow> rows) {
  using internal::FormatDouble;
  out << "q,v_continuous,v_discrete,n_billions,pred_error,flops\n";
  for (const SweepRow& r : rows) {
    out << r.q << ',' << FormatDouble(r.v_continuous) << ','
        << FormatDouble(r.discrete.visual_tokens) << ','
        << FormatDouble(r.discrete.llm_params_b) << ','
        << FormatDouble(r.discrete.predicted_error) << ','
        << FormatDouble(r.discrete.flops) << '\n';
  }
}

void WriteFrontierCsv(std::ostream& out, const ParetoFrontier& frontier) {
  using internal::FormatDouble;
  out << "budget,v_discrete,n_billions,pred_error,flops\n";
  for (const ParetoPoint& p : frontier.points) {
    out << FormatDouble(p.flops) << ','
        << FormatDouble(p.best_allocation.visual_tokens) << ','
        << FormatDouble(p.best_allocation.llm_params_b) << ','
        << FormatDouble(p.best_error) << ','
        << FormatDouble(p.best_allocation.flops) << '\n';
  }
}

}  // namespace tokenscale
