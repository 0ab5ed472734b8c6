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

#ifndef TOKENSCALE_FLOPS_MODEL_H_
#define TOKENSCALE_FLOPS_MODEL_H_

#include <cstdint>

namespace tokenscale {

// One multiply-accumulate per parameter per processed token.
inline constexpr double kDefaultFlopsPerParamToken = 2.0;

// A point in inference-cost space. `llm_params` is an absolute parameter
// count here, not billions. The vision encoder is not part of the cost.
struct InferenceConfig {
  double llm_params = 0.0;
  std::int64_t text_tokens = 0;       // Q
  std::int64_t visual_tokens = 0;     // V
  std::int64_t generated_tokens = 0;  // G
  bool prompt_cached = false;

  // Tokens the LLM actually runs: a cached prompt contributes nothing.
  std::int64_t EffectiveTokens() const {
    return (prompt_cached ? 0 : text_tokens) + visual_tokens + generated_tokens;
  }
};

// k * N * T_eff. Throws DegenerateConfigError when T_eff == 0 and
// ValidationError on N <= 0, k <= 0 or negative token counts.
double InferenceFlops(const InferenceConfig& config,
                      double flops_per_param_token = kDefaultFlopsPerParamToken);

// Largest N with InferenceFlops == budget, i.e. C / (k * T_eff).
double MaxParamsUnderBudget(double budget, std::int64_t text_tokens,
                            std::int64_t visual_tokens,
                            std::int64_t generated_tokens, bool prompt_cached,
                            double flops_per_param_token =
                                kDefaultFlopsPerParamToken);

}  // namespace tokenscale

#endif  // TOKENSCALE_FLOPS_MODEL_H_
