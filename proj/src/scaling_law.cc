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

#include "tokenscale/scaling_law.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "text_util.h"
#include "tokenscale/errors.h"

namespace tokenscale {
namespace {

constexpr int kAxes = 4;

// Power-law factor N^-alpha * T^-beta, shared by Evaluate and the scan so
// both produce the same bits.
inline double PowerFactor(double n, double t, double alpha, double beta) {
  return std::pow(n, -alpha) * std::pow(t, -beta);
}

struct FitData {
  std::vector<double> n;
  std::vector<double> t;
  std::vector<double> y;
};

FitData PrepareFitData(std::span<const AggregatedPoint> points) {
  if (points.size() < 5) {
    throw UnderdeterminedFitError("underdetermined fit: need at least 5 points, got " +
                                  std::to_string(points.size()));
  }
  std::set<double> distinct_n;
  std::set<std::int64_t> distinct_t;
  FitData data;
  for (const AggregatedPoint& p : points) {
    if (!(p.llm_params_b > 0.0) || p.visual_tokens < 1 ||
        !std::isfinite(p.error)) {
      throw ValidationError("invalid fit point");
    }
    distinct_n.insert(p.llm_params_b);
    distinct_t.insert(p.visual_tokens);
    data.n.push_back(p.llm_params_b);
    data.t.push_back(static_cast<double>(p.visual_tokens));
    data.y.push_back(p.error);
  }
  if (distinct_n.size() < 2 || distinct_t.size() < 2) {
    throw UnderdeterminedFitError(
        "underdetermined fit: need at least 2 distinct N and 2 distinct T");
  }
  return data;
}

std::vector<double> Linspace(Interval range, int count) {
  std::vector<double> values(count);
  for (int i = 0; i < count; ++i) {
    values[i] = range.lo + (range.hi - range.lo) * i / (count - 1);
  }
  values.back() = range.hi;
  return values;
}

struct Candidate {
  double loss = std::numeric_limits<double>::infinity();
  std::int64_t index = std::numeric_limits<std::int64_t>::max();

  // Total order: loss first, then grid index (lexicographic in parameters).
  bool Beats(const Candidate& other) const {
    return loss < other.loss || (loss == other.loss && index < other.index);
  }
};

using Axes = std::array<std::vector<double>, kAxes>;

// Scans every scale/d pair for one (alpha, beta) cell.
inline void ScanCell(const Axes& axes, const FitData& data, int ia, int ib,
                     std::vector<double>& factor, Candidate& best) {
  const std::size_t n_points = data.y.size();
  const int p = static_cast<int>(axes[0].size());
  for (std::size_t j = 0; j < n_points; ++j) {
    factor[j] = PowerFactor(data.n[j], data.t[j], axes[0][ia], axes[1][ib]);
  }
  const std::int64_t cell = (static_cast<std::int64_t>(ia) * p + ib) * p * p;
  for (int is = 0; is < p; ++is) {
    const double scale = axes[2][is];
    for (int id = 0; id < p; ++id) {
      const double d = axes[3][id];
      double sum = 0.0;
      for (std::size_t j = 0; j < n_points; ++j) {
        const double r = scale * factor[j] + d - data.y[j];
        sum += r * r;
      }
      const Candidate c{sum / static_cast<double>(n_points),
                        cell + static_cast<std::int64_t>(is) * p + id};
      if (c.Beats(best)) best = c;
    }
  }
}

Candidate ScanSerial(const Axes& axes, const FitData& data) {
  const int p = static_cast<int>(axes[0].size());
  std::vector<double> factor(data.y.size());
  Candidate best;
  for (int ia = 0; ia < p; ++ia) {
    for (int ib = 0; ib < p; ++ib) ScanCell(axes, data, ia, ib, factor, best);
  }
  return best;
}

Candidate ScanParallel(const Axes& axes, const FitData& data) {
  const int p = static_cast<int>(axes[0].size());
  const int cells = p * p;
  Candidate best;
#pragma omp parallel
  {
    std::vector<double> factor(data.y.size());
    Candidate local;
#pragma omp for schedule(static)
    for (int cell = 0; cell < cells; ++cell) {
      ScanCell(axes, data, cell / p, cell % p, factor, local);
    }
#pragma omp critical(tokenscale_fit_reduce)
    if (local.Beats(best)) best = local;
  }
  return best;
}

std::array<double, kAxes> Decode(const Axes& axes, std::int64_t index) {
  const std::int64_t p = static_cast<std::int64_t>(axes[0].size());
  std::array<double, kAxes> params{};
  for (int axis = kAxes - 1; axis >= 0; --axis) {
    params[axis] = axes[axis][index % p];
    index /= p;
  }
  return params;
}

template <typename Scan>
FitResult RunFit(std::span<const AggregatedPoint> points, const FitGrid& grid,
                 Scan scan) {
  Validate(grid);
  const FitData data = PrepareFitData(points);
  const std::array<Interval, kAxes> original = {grid.alpha, grid.beta,
                                                grid.scale, grid.d};
  std::array<Interval, kAxes> ranges = original;

  std::array<double, kAxes> incumbent{};
  double incumbent_loss = std::numeric_limits<double>::infinity();
  std::array<double, kAxes> step{};

  for (int round = 0; round <= grid.refine_rounds; ++round) {
    Axes axes;
    for (int a = 0; a < kAxes; ++a) {
      axes[a] = Linspace(ranges[a], grid.points_per_axis);
      step[a] = (ranges[a].hi - ranges[a].lo) / (grid.points_per_axis - 1);
    }
    const Candidate best = scan(axes, data);
    const auto params = Decode(axes, best.index);
    if (best.loss < incumbent_loss ||
        (best.loss == incumbent_loss && params < incumbent)) {
      incumbent = params;
      incumbent_loss = best.loss;
    }
    for (int a = 0; a < kAxes; ++a) {
      const double half =
          (ranges[a].hi - ranges[a].lo) / grid.shrink_factor / 2.0;
      ranges[a].lo = std::max(original[a].lo, incumbent[a] - half);
      ranges[a].hi = std::min(original[a].hi, incumbent[a] + half);
    }
  }

  FitResult result;
  result.law = {incumbent[0], incumbent[1], incumbent[2], incumbent[3]};
  result.fit_loss = MeanSquaredError(result.law, points);
  result.n_points = static_cast<std::int64_t>(points.size());
  result.final_step = step;
  return result;
}

}  // namespace

void Validate(const ScalingLaw& law) {
  for (double v : {law.alpha, law.beta, law.scale, law.d}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("scaling law parameters must be finite and >= 0");
    }
  }
}

double Evaluate(const ScalingLaw& law, double llm_params_b, double tokens) {
  if (!(llm_params_b > 0.0) || !(tokens > 0.0)) {
    throw DomainError("scaling law needs N > 0 and T > 0");
  }
  return law.scale * PowerFactor(llm_params_b, tokens, law.alpha, law.beta) +
         law.d;
}

void Validate(const FitGrid& grid) {
  for (const Interval& r : {grid.alpha, grid.beta, grid.scale, grid.d}) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo < 0.0 ||
        r.lo > r.hi) {
      throw ValidationError("fit grid ranges must satisfy 0 <= lo <= hi");
    }
  }
  if (grid.points_per_axis < 2) {
    throw ValidationError("points_per_axis must be >= 2");
  }
  if (grid.refine_rounds < 0) {
    throw ValidationError("refine_rounds must be >= 0");
  }
  if (!(grid.shrink_factor > 1.0)) {
    throw ValidationError("shrink_factor must be > 1");
  }
}

double MeanSquaredError(const ScalingLaw& law,
                        std::span<const AggregatedPoint> points) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const AggregatedPoint& p : points) {
    const double r = Evaluate(law, p.llm_params_b,
                              static_cast<double>(p.visual_tokens)) -
                     p.error;
    sum += r * r;
  }
  return sum / static_cast<double>(points.size());
}

FitResult FitGridSearch(std::span<const AggregatedPoint> points,
                        const FitGrid& grid) {
  return RunFit(points, grid, ScanParallel);
}

FitResult FitGridSearchSerial(std::span<const AggregatedPoint> points,
                              const FitGrid& grid) {
  return RunFit(points, grid, ScanSerial);
}

double ExtrapolationError(const FitResult& result,
                          std::span<const AggregatedPoint> holdout) {
  if (holdout.empty()) throw DomainError("empty holdout set");
  double worst = 0.0;
  for (const AggregatedPoint& p : holdout) {
    const double predicted = Evaluate(result.law, p.llm_params_b,
                                      static_cast<double>(p.visual_tokens));
    worst = std::max(worst, std::abs(predicted - p.error));
  }
  return worst;
}

std::string SerializeFitResult(const FitResult& result) {
  using internal::FormatDouble;
  std::ostringstream out;
  out << "alpha=" << FormatDouble(result.law.alpha) << '\n'
      << "beta=" << FormatDouble(result.law.beta) << '\n'
      << "scale=" << FormatDouble(result.law.scale) << '\n'
      << "d=" << FormatDouble(result.law.d) << '\n'
      << "fit_loss=" << FormatDouble(result.fit_loss) << '\n'
      << "n_points=" << result.n_points << '\n'
      << "params_unit=" << ScalingLaw::kParamsUnit << '\n';
  return out.str();
}

FitResult ParseFitResult(std::string_view text) {
  std::map<std::string, double> values;
  std::size_t line_no = 0;
  for (std::string_view raw : internal::Split(text, '\n')) {
    ++line_no;
    const std::string_view line = internal::Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected key=value");
    }
    const std::string key(internal::Trim(line.substr(0, eq)));
    const std::string_view value = internal::Trim(line.substr(eq + 1));
    if (key == "params_unit") {
      if (value != ScalingLaw::kParamsUnit) {
        throw ParseError(line_no, "params_unit must be billions");
      }
      continue;
    }
    if (key != "alpha" && key != "beta" && key != "scale" && key != "d" &&
        key != "fit_loss" && key != "n_points") {
      throw ParseError(line_no, "unknown key '" + key + "'");
    }
    const auto parsed = internal::ParseDouble(value);
    if (!parsed) throw ParseError(line_no, "bad number for '" + key + "'");
    if (!values.emplace(key, *parsed).second) {
      throw ParseError(line_no, "duplicate key '" + key + "'");
    }
  }
  for (const char* required : {"alpha", "beta", "scale", "d"}) {
    if (!values.contains(required)) {
      throw ParseError(line_no, std::string("missing key '") + required + "'");
    }
  }
  FitResult result;
  result.law = {values["alpha"], values["beta"], values["scale"], values["d"]};
  Validate(result.law);
  result.fit_loss = values.contains("fit_loss") ? values["fit_loss"] : 0.0;
  result.n_points = values.contains("n_points")
                        ? static_cast<std::int64_t>(values["n_points"])
                        : 0;
  return result;
}

}  // namespace tokenscale
