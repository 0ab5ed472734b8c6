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

// Serial reference kernels against their OpenMP counterparts.
//   ./bench_kernels --benchmark_filter=Attention

#include <benchmark/benchmark.h>

#include "test_fixtures.h"
#include "tokenscale/quecc.h"
#include "tokenscale/scaling_law.h"

namespace tokenscale {
namespace {

std::vector<AggregatedPoint> FitData() {
  return testing::SyntheticPoints(testing::kSyntheticTruth, testing::kFitSizes);
}

void BM_FitSerial(benchmark::State& state) {
  const auto points = FitData();
  FitGrid grid;
  grid.points_per_axis = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(FitGridSearchSerial(points, grid));
}

void BM_FitParallel(benchmark::State& state) {
  const auto points = FitData();
  FitGrid grid;
  grid.points_per_axis = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(FitGridSearch(points, grid));
}

BENCHMARK(BM_FitSerial)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitParallel)->Arg(11)->Arg(21)->Unit(benchmark::kMillisecond);

struct AttentionCase {
  Matrix queries, x;
  ProjectorWeights w;
};

AttentionCase MakeCase(std::size_t stride, std::size_t d) {
  const ProjectorDims dims{d, d, d, d, stride};
  AttentionCase c{Matrix(), RandomMatrix(576, d, 3, -1, 1), RandomWeights(dims, 5)};
  c.queries = ConvDownsampleSerial(c.x, c.w.conv_kernel, stride);
  return c;
}

void BM_ConvSerial(benchmark::State& state) {
  const auto c = MakeCase(state.range(0), 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ConvDownsampleSerial(c.x, c.w.conv_kernel, state.range(0)));
  }
}

void BM_ConvParallel(benchmark::State& state) {
  const auto c = MakeCase(state.range(0), 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ConvDownsample(c.x, c.w.conv_kernel, state.range(0)));
  }
}

void BM_AttentionSerial(benchmark::State& state) {
  const auto c = MakeCase(state.range(0), 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(LocalCrossAttentionSerial(c.queries, c.x, c.w.w_q, c.w.w_k,
                                                       c.w.w_v, state.range(0)));
  }
}

void BM_AttentionParallel(benchmark::State& state) {
  const auto c = MakeCase(state.range(0), 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        LocalCrossAttention(c.queries, c.x, c.w.w_q, c.w.w_k, c.w.w_v, state.range(0)));
  }
}

BENCHMARK(BM_ConvSerial)->Arg(2)->Arg(4)->Arg(12);
BENCHMARK(BM_ConvParallel)->Arg(2)->Arg(4)->Arg(12);
BENCHMARK(BM_AttentionSerial)->Arg(2)->Arg(4)->Arg(12);
BENCHMARK(BM_AttentionParallel)->Arg(2)->Arg(4)->Arg(12);

}  // namespace
}  // namespace tokenscale

BENCHMARK_MAIN();
