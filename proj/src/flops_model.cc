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

#include "tokenscale/flops_model.h"

#include <cmath>

#include "tokenscale/errors.h"

namespace tokenscale {
namespace {

void CheckTokens(std::int64_t q, std::int64_t v, std::int64_t g) {
  if (q < 0 || v < 0 || g < 0) {
    throw ValidationError("token counts must be nonnegative");
  }
}

void CheckK(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw ValidationError("flops per param-token must be positive");
  }
}

}  // namespace

double InferenceFlops(const InferenceConfig& config,
                      double flops_per_param_token) {
  CheckTokens(config.text_tokens, config.visual_tokens,
              config.generated_tokens);
  CheckK(flops_per_param_token);
  if (!(config.llm_params > 0.0) || !std::isfinite(config.llm_params)) {
    throw ValidationError("llm_params must be positive");
  }
  const std::int64_t tokens = config.EffectiveTokens();
  if (tokens == 0) throw DegenerateConfigError("no tokens to process");
  return flops_per_param_token * config.llm_params *
         static_cast<double>(tokens);
}

double MaxParamsUnderBudget(double budget, std::int64_t text_tokens,
                            std::int64_t visual_tokens,
                            std::int64_t generated_tokens, bool prompt_cached,
                            double flops_per_param_token) {
  CheckTokens(text_tokens, visual_tokens, generated_tokens);
  CheckK(flops_per_param_token);
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw ValidationError("budget must be positive");
  }
  const std::int64_t tokens =
      (prompt_cached ? 0 : text_tokens) + visual_tokens + generated_tokens;
  if (tokens == 0) throw DegenerateConfigError("no tokens to process");
  return budget / (flops_per_param_token * static_cast<double>(tokens));
}

}  // namespace tokenscale
