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

#ifndef TOKENSCALE_BENCHMARK_DATA_H_
#define TOKENSCALE_BENCHMARK_DATA_H_

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tokenscale {

enum class MetricKind { kAccuracyPercent, kMmeCombined, kF1Percent };

// MME reports perception (max 2000) plus cognition (max 800).
inline constexpr double kMmeCombinedMax = 2800.0;

MetricKind ParseMetricKind(std::string_view text);
std::string_view MetricKindName(MetricKind kind);
// Largest legal raw score for `kind`.
double MetricMax(MetricKind kind);

// One benchmark measurement of one (LLM size, visual token count) config.
struct EvalRecord {
  double llm_params_b = 0.0;  // billions
  std::int64_t visual_tokens = 0;
  std::string benchmark;
  double raw_score = 0.0;
  MetricKind metric_kind = MetricKind::kAccuracyPercent;
};

// Throws ValidationError naming the benchmark when a field is out of range.
void Validate(const EvalRecord& record);

// Mean normalized error of one configuration.
struct AggregatedPoint {
  double llm_params_b = 0.0;
  std::int64_t visual_tokens = 0;
  double error = 0.0;  // fraction in [0, 1]
  std::int64_t n_benchmarks = 0;
};

inline constexpr std::string_view kRecordHeader =
    "llm_params_b,visual_tokens,benchmark,metric_kind,score";

// Reads the CSV record format. Blank lines and lines starting with `#` are
// skipped; an empty stream yields no records. Throws ParseError (with the
// 1-based line number) on malformed rows and ValidationError on scores
// outside the metric's range.
std::vector<EvalRecord> IngestRecords(std::istream& source);

// Score mapped to [0, 1]: percentages / 100, MME / 2800.
double NormalizeScore(const EvalRecord& record);

// One point per (llm_params_b, visual_tokens) group, sorted by N then T.
// error = mean(1 - normalized score) over the benchmarks present. Benchmark
// names compare case-insensitively after trimming.
std::vector<AggregatedPoint> AggregateError(std::span<const EvalRecord> records);

struct ParamSplit {
  std::vector<AggregatedPoint> fit;      // llm_params_b <= threshold
  std::vector<AggregatedPoint> holdout;  // llm_params_b > threshold
};

ParamSplit SplitByParams(std::span<const AggregatedPoint> points,
                         double threshold_b);

// Writes records back out in the ingest format.
void WriteRecords(std::ostream& out, std::span<const EvalRecord> records);

}  // namespace tokenscale

#endif  // TOKENSCALE_BENCHMARK_DATA_H_
