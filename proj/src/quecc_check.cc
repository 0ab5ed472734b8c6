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

#include "tokenscale/quecc_check.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "tokenscale/quecc.h"

namespace tokenscale {
namespace {

// Compression table for the 576-token grid: stride -> output tokens.
constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kShapeTable = {
    {{2, 144}, {3, 64}, {4, 36}, {6, 16}, {12, 4}, {24, 1}}};

bool ShapeTableHolds() {
  const Matrix x(576, 1, 1.0);
  for (const auto& [stride, expected] : kShapeTable) {
    const Matrix kernel(1, stride * stride, 1.0);
    if (ConvDownsample(x, kernel, stride).rows() != expected) return false;
  }
  return true;
}

}  // namespace

QueccCheckReport RunQueccCheck(std::size_t n, std::size_t d, std::size_t stride,
                               std::uint64_t seed) {
  QueccCheckReport report;
  report.n = n;
  report.d = d;
  report.stride = stride;

  const ProjectorDims dims{d, d, d, d, stride};
  const ProjectorWeights weights = RandomWeights(dims, seed);
  const Matrix x = RandomMatrix(n, d, seed + 1, -1.0, 1.0);
  const Matrix text = RandomMatrix(1, d, seed + 2, -1.0, 1.0);
  const auto text_state = text.row(0);

  const ForwardTrace trace = QueccForwardTrace(x, text_state, weights);
  report.m = trace.output.rows();
  report.shape_table_ok =
      ShapeTableHolds() && report.m * stride * stride == n;

  for (std::size_t i = 0; i < trace.attention.rows(); ++i) {
    double sum = 0.0;
    for (double p : trace.attention.row(i)) sum += p;
    report.softmax_max_dev = std::max(report.softmax_max_dev, std::abs(sum - 1.0));
  }

  const std::size_t side = GridSide(n);
  const std::size_t m = n / (stride * stride);

  // Every token of a region equal to that region's first token.
  Matrix flat = x;
  for (std::size_t i = 0; i < m; ++i) {
    const auto rows = RegionRows(i, side, stride);
    for (std::size_t r : rows) {
      std::copy(x.row(rows[0]).begin(), x.row(rows[0]).end(), flat.row(r).begin());
    }
  }
  const Matrix flat_out = LocalCrossAttention(trace.downsampled, flat, weights.w_q,
                                              weights.w_k, weights.w_v, stride);
  for (std::size_t i = 0; i < m; ++i) {
    const auto rows = RegionRows(i, side, stride);
    for (std::size_t c = 0; c < d; ++c) {
      double expected = 0.0;
      for (std::size_t k = 0; k < d; ++k) expected += flat(rows[0], k) * weights.w_v(k, c);
      report.identical_region_max_dev =
          std::max(report.identical_region_max_dev, std::abs(flat_out(i, c) - expected));
    }
  }

  // Shuffle tokens inside every region, queries held fixed.
  std::mt19937_64 rng(seed + 3);
  Matrix shuffled = x;
  for (std::size_t i = 0; i < m; ++i) {
    auto rows = RegionRows(i, side, stride);
    auto targets = rows;
    std::shuffle(targets.begin(), targets.end(), rng);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(),
                shuffled.row(targets[k]).begin());
    }
  }
  const Matrix shuffled_out = LocalCrossAttention(
      trace.downsampled, shuffled, weights.w_q, weights.w_k, weights.w_v, stride);
  report.permutation_max_dev = MaxAbsDiff(shuffled_out, trace.attended);

  report.parallel_matches_serial =
      ConvDownsampleSerial(trace.injected, weights.conv_kernel, stride) ==
          trace.downsampled &&
      LocalCrossAttentionSerial(trace.downsampled, x, weights.w_q, weights.w_k,
                                weights.w_v, stride) == trace.attended;

  const GradCheckReport grad = GradCheck(weights, x, text_state);
  report.grad_max_rel_error = grad.max_rel_error;
  report.grad_worst_tensor = grad.worst_tensor;
  return report;
}

}  // namespace tokenscale
