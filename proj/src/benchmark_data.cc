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

#include "tokenscale/benchmark_data.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "text_util.h"
#include "tokenscale/errors.h"

namespace tokenscale {

using internal::ParseDouble;
using internal::ParseInt;
using internal::ToLower;
using internal::Trim;

MetricKind ParseMetricKind(std::string_view text) {
  const std::string key = ToLower(Trim(text));
  if (key == "accuracy_percent") return MetricKind::kAccuracyPercent;
  if (key == "mme_combined") return MetricKind::kMmeCombined;
  if (key == "f1_percent") return MetricKind::kF1Percent;
  throw UnsupportedMetricError("unsupported metric kind '" + std::string(text) +
                               "'");
}

std::string_view MetricKindName(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAccuracyPercent:
      return "accuracy_percent";
    case MetricKind::kMmeCombined:
      return "mme_combined";
    case MetricKind::kF1Percent:
      return "f1_percent";
  }
  throw UnsupportedMetricError("unsupported metric kind");
}

double MetricMax(MetricKind kind) {
  switch (kind) {
    case MetricKind::kAccuracyPercent:
    case MetricKind::kF1Percent:
      return 100.0;
    case MetricKind::kMmeCombined:
      return kMmeCombinedMax;
  }
  throw UnsupportedMetricError("unsupported metric kind");
}

void Validate(const EvalRecord& record) {
  if (!(record.llm_params_b > 0.0) || !std::isfinite(record.llm_params_b)) {
    throw ValidationError("benchmark '" + record.benchmark +
                          "': llm_params_b must be positive");
  }
  if (record.visual_tokens < 1) {
    throw ValidationError("benchmark '" + record.benchmark +
                          "': visual_tokens must be >= 1");
  }
  const double max = MetricMax(record.metric_kind);
  if (!(record.raw_score >= 0.0 && record.raw_score <= max)) {
    throw ValidationError("benchmark '" + record.benchmark + "': score " +
                          internal::FormatDouble(record.raw_score) +
                          " outside [0, " + internal::FormatDouble(max) + "]");
  }
}

std::vector<EvalRecord> IngestRecords(std::istream& source) {
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string_view text = Trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = internal::Split(text, ',');
    if (!seen_header) {
      std::string header;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) header += ',';
        header += ToLower(Trim(fields[i]));
      }
      if (header != kRecordHeader) {
        throw ParseError(line_no, "expected header '" +
                                      std::string(kRecordHeader) + "'");
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields, got " +
                                    std::to_string(fields.size()));
    }
    EvalRecord record;
    const auto params = ParseDouble(fields[0]);
    const auto tokens = ParseInt(fields[1]);
    const auto score = ParseDouble(fields[4]);
    if (!params) throw ParseError(line_no, "bad llm_params_b");
    if (!tokens) throw ParseError(line_no, "bad visual_tokens");
    if (!score) throw ParseError(line_no, "bad score");
    record.llm_params_b = *params;
    record.visual_tokens = *tokens;
    record.benchmark = std::string(Trim(fields[2]));
    if (record.benchmark.empty()) throw ParseError(line_no, "empty benchmark");
    record.metric_kind = ParseMetricKind(fields[3]);
    record.raw_score = *score;
    Validate(record);
    records.push_back(std::move(record));
  }
  if (source.bad()) throw IoError("read failure");
  return records;
}

double NormalizeScore(const EvalRecord& record) {
  return record.raw_score / MetricMax(record.metric_kind);
}

std::vector<AggregatedPoint> AggregateError(
    std::span<const EvalRecord> records) {
  using Key = std::pair<double, std::int64_t>;
  // benchmark name -> normalized error; std::map fixes the summation order
  std::map<Key, std::map<std::string, double>> groups;
  for (const EvalRecord& record : records) {
    Validate(record);
    auto& group = groups[{record.llm_params_b, record.visual_tokens}];
    const std::string name = ToLower(Trim(record.benchmark));
    const auto [it, inserted] =
        group.emplace(name, 1.0 - NormalizeScore(record));
    if (!inserted) {
      throw DuplicateRecordError(
          "duplicate benchmark '" + name + "' at N=" +
          internal::FormatDouble(record.llm_params_b) +
          "B, V=" + std::to_string(record.visual_tokens));
    }
  }
  std::vector<AggregatedPoint> points;
  points.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    double sum = 0.0;
    for (const auto& [name, err] : group) sum += err;
    AggregatedPoint p;
    p.llm_params_b = key.first;
    p.visual_tokens = key.second;
    p.n_benchmarks = static_cast<std::int64_t>(group.size());
    p.error = std::clamp(sum / static_cast<double>(group.size()), 0.0, 1.0);
    points.push_back(p);
  }
  return points;
}

ParamSplit SplitByParams(std::span<const AggregatedPoint> points,
                         double threshold_b) {
  if (!(threshold_b > 0.0)) {
    throw ValidationError("split threshold must be positive");
  }
  ParamSplit split;
  for (const AggregatedPoint& p : points) {
    (p.llm_params_b <= threshold_b ? split.fit : split.holdout).push_back(p);
  }
  return split;
}

void WriteRecords(std::ostream& out, std::span<const EvalRecord> records) {
  out << kRecordHeader << '\n';
  for (const EvalRecord& r : records) {
    out << internal::FormatDouble(r.llm_params_b) << ',' << r.visual_tokens
        << ',' << r.benchmark << ',' << MetricKindName(r.metric_kind) << ','
        << internal::FormatDouble(r.raw_score) << '\n';
  }
}

}  // namespace tokenscale
