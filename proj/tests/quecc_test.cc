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

#include "tokenscale/quecc.h"

#include <gtest/gtest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "tokenscale/errors.h"
#include "tokenscale/quecc_check.h"

namespace tokenscale {
namespace {

Matrix FromRows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::copy(r.begin(), r.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Identity(std::size_t d) {
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> RandomVector(std::size_t n, std::uint64_t seed) {
  const Matrix m = RandomMatrix(1, n, seed, -1.0, 1.0);
  return {m.flat().begin(), m.flat().end()};
}

TEST(InjectQueryTest, ZeroStateIsIdentity) {
  const Matrix x = RandomMatrix(16, 4, 1);
  const std::vector<double> zero(3, 0.0);
  EXPECT_EQ(InjectQuery(x, zero, RandomMatrix(3, 4, 2)), x);
}

TEST(InjectQueryTest, BroadcastsProjectedState) {
  const Matrix x(9, 3);
  const Matrix w = FromRows({{1, 2, 3}, {4, 5, 6}});
  const std::vector<double> t = {1.0, -1.0};
  const Matrix out = InjectQuery(x, t, w);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(out(i, 0), -3.0);
    EXPECT_EQ(out(i, 1), -3.0);
    EXPECT_EQ(out(i, 2), -3.0);
  }
}

TEST(InjectQueryTest, Linear) {
  const Matrix x = RandomMatrix(16, 4, 3);
  const Matrix w = RandomMatrix(5, 4, 4);
  const auto t1 = RandomVector(5, 5);
  const auto t2 = RandomVector(5, 6);
  std::vector<double> sum(5);
  for (int i = 0; i < 5; ++i) sum[i] = t1[i] + t2[i];
  EXPECT_LT(MaxAbsDiff(InjectQuery(InjectQuery(x, t1, w), t2, w), InjectQuery(x, sum, w)),
            1e-14);
}

TEST(InjectQueryTest, ShapeMismatch) {
  const std::vector<double> t(3, 1.0);
  EXPECT_THROW(InjectQuery(Matrix(4, 4), t, Matrix(2, 4)), ShapeError);
  EXPECT_THROW(InjectQuery(Matrix(4, 4), t, Matrix(3, 5)), ShapeError);
}

TEST(ConvDownsampleTest, OutputCounts) {
  const Matrix x(576, 2, 1.0);
  const std::pair<std::size_t, std::size_t> table[] = {
      {2, 144}, {3, 64}, {4, 36}, {6, 16}, {12, 4}, {24, 1}};
  for (const auto& [s, m] : table) {
    EXPECT_EQ(ConvDownsample(x, Matrix(2, s * s, 1.0), s).rows(), m);
  }
}

TEST(ConvDownsampleTest, UnitKernelStrideOneIsIdentity) {
  const Matrix x = RandomMatrix(25, 3, 8);
  EXPECT_EQ(ConvDownsample(x, Matrix(3, 1, 1.0), 1), x);
}

TEST(ConvDownsampleTest, ConstantField) {
  const Matrix x(36, 2, 0.5);
  Matrix kernel(2, 9);
  for (std::size_t k = 0; k < 9; ++k) {
    kernel(0, k) = 0.1 * static_cast<double>(k);  // sums to 3.6
    kernel(1, k) = -1.0;                          // sums to -9
  }
  const Matrix out = ConvDownsample(x, kernel, 3);
  ASSERT_EQ(out.rows(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(out(i, 0), 0.5 * 3.6, 1e-15);
    EXPECT_NEAR(out(i, 1), -4.5, 1e-15);
  }
}

TEST(ConvDownsampleTest, HandComputedRegions) {
  // 4x4 grid, one channel holding its own token index, stride 2.
  Matrix x(16, 1);
  for (std::size_t i = 0; i < 16; ++i) x(i, 0) = static_cast<double>(i);
  const Matrix kernel = FromRows({{1, 10, 100, 1000}});
  const Matrix out = ConvDownsample(x, kernel, 2);
  // region 0 = tokens {0,1,4,5}, region 3 = {10,11,14,15}
  EXPECT_EQ(out(0, 0), 0 + 10 + 400 + 5000);
  EXPECT_EQ(out(1, 0), 2 + 30 + 600 + 7000);
  EXPECT_EQ(out(2, 0), 8 + 90 + 1200 + 13000);
  EXPECT_EQ(out(3, 0), 10 + 110 + 1400 + 15000);
}

TEST(ConvDownsampleTest, Errors) {
  EXPECT_THROW(ConvDownsample(Matrix(576, 1), Matrix(1, 25), 5), TilingError);
  EXPECT_THROW(ConvDownsample(Matrix(20, 1), Matrix(1, 4), 2), GridError);
  EXPECT_THROW(ConvDownsample(Matrix(16, 2), Matrix(1, 4), 2), ShapeError);
}

TEST(ConvDownsampleTest, ParallelMatchesSerial) {
  const Matrix x = RandomMatrix(576, 8, 10);
  const Matrix kernel = RandomMatrix(8, 16, 11);
  const Matrix serial = ConvDownsampleSerial(x, kernel, 4);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 5}) {
    omp_set_num_threads(threads);
    EXPECT_EQ(ConvDownsample(x, kernel, 4), serial);
  }
  omp_set_num_threads(saved);
}

TEST(LocalCrossAttentionTest, IdenticalRegionReturnsProjectedToken) {
  const std::size_t d = 4, s = 2;
  Matrix x(16, d);
  for (std::size_t region = 0; region < 4; ++region) {
    const auto token = RandomVector(d, 20 + region);
    for (std::size_t r : RegionRows(region, 4, s)) {
      std::copy(token.begin(), token.end(), x.row(r).begin());
    }
  }
  const Matrix w_v = RandomMatrix(d, d, 30);
  const Matrix out = LocalCrossAttention(RandomMatrix(4, d, 31), x,
                                         RandomMatrix(d, d, 32),
                                         RandomMatrix(d, d, 33), w_v, s);
  for (std::size_t region = 0; region < 4; ++region) {
    const std::size_t first = RegionRows(region, 4, s)[0];
    for (std::size_t c = 0; c < d; ++c) {
      double expected = 0.0;
      for (std::size_t k = 0; k < d; ++k) expected += x(first, k) * w_v(k, c);
      EXPECT_NEAR(out(region, c), expected, 1e-12);
    }
  }
}

TEST(LocalCrossAttentionTest, SingletonRegions) {
  const Matrix x = RandomMatrix(9, 3, 40);
  const Matrix w_v = RandomMatrix(3, 3, 41);
  const Matrix out = LocalCrossAttention(RandomMatrix(9, 3, 42), x,
                                         RandomMatrix(3, 3, 43),
                                         RandomMatrix(3, 3, 44), w_v, 1);
  EXPECT_LT(MaxAbsDiff(out, MatMul(x, w_v)), 1e-15);
}

TEST(LocalCrossAttentionTest, HandComputedToy) {
  // Frozen from an independent scalar script: d = 2, s = 2, n = 4, m = 1.
  const Matrix queries = FromRows({{1.0, 0.5}});
  const Matrix x = FromRows({{1, 0}, {0, 1}, {1, 1}, {0, 0}});
  const Matrix w_v = FromRows({{1, 2}, {3, 4}});
  const Matrix out = LocalCrossAttention(queries, x, Identity(2), Identity(2), w_v, 2);
  EXPECT_NEAR(out(0, 0), 2.4321985518454863, 1e-14);
  EXPECT_NEAR(out(0, 1), 3.689439102011753, 1e-14);
  const Matrix p = RegionAttentionWeights(queries, x, Identity(2), Identity(2), 2);
  EXPECT_NEAR(p(0, 0), 0.2762907035274435, 1e-15);
  EXPECT_NEAR(p(0, 1), 0.19400815504039637, 1e-15);
  EXPECT_NEAR(p(0, 2), 0.39347084579921343, 1e-15);
  EXPECT_NEAR(p(0, 3), 0.13623029563294675, 1e-15);
}

TEST(LocalCrossAttentionTest, SoftmaxRowsSumToOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = RandomMatrix(64, 8, seed, -3, 3);
    const Matrix p = RegionAttentionWeights(RandomMatrix(16, 8, seed + 9, -3, 3), x,
                                            RandomMatrix(8, 8, seed + 1, -2, 2),
                                            RandomMatrix(8, 8, seed + 2, -2, 2), 2);
    for (std::size_t i = 0; i < p.rows(); ++i) {
      const auto row = p.row(i);
      EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(LocalCrossAttentionTest, PermutationInvariantWithinRegion) {
  std::mt19937_64 rng(50);
  const Matrix q = RandomMatrix(4, 6, 51);
  const Matrix x = RandomMatrix(64, 6, 52);
  const Matrix w_q = RandomMatrix(6, 6, 53), w_k = RandomMatrix(6, 6, 54),
               w_v = RandomMatrix(6, 6, 55);
  const Matrix reference = LocalCrossAttention(q, x, w_q, w_k, w_v, 4);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix permuted = x;
    for (std::size_t region = 0; region < 4; ++region) {
      auto rows = RegionRows(region, 8, 4);
      auto targets = rows;
      std::shuffle(targets.begin(), targets.end(), rng);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        std::copy(x.row(rows[k]).begin(), x.row(rows[k]).end(),
                  permuted.row(targets[k]).begin());
      }
    }
    EXPECT_LT(MaxAbsDiff(LocalCrossAttention(q, permuted, w_q, w_k, w_v, 4), reference),
              1e-12);
  }
}

TEST(LocalCrossAttentionTest, HomogeneousInValueProjection) {
  const Matrix q = RandomMatrix(4, 4, 60);
  const Matrix x = RandomMatrix(16, 4, 61);
  const Matrix w_q = RandomMatrix(4, 4, 62), w_k = RandomMatrix(4, 4, 63);
  Matrix w_v = RandomMatrix(4, 4, 64);
  const Matrix base = LocalCrossAttention(q, x, w_q, w_k, w_v, 2);
  for (double& v : w_v.flat()) v *= -2.5;
  Matrix scaled = LocalCrossAttention(q, x, w_q, w_k, w_v, 2);
  for (double& v : scaled.flat()) v /= -2.5;
  EXPECT_LT(MaxAbsDiff(scaled, base), 1e-14);
}

TEST(LocalCrossAttentionTest, ParallelMatchesSerial) {
  const Matrix q = RandomMatrix(36, 8, 70);
  const Matrix x = RandomMatrix(576, 8, 71);
  const Matrix w_q = RandomMatrix(8, 8, 72), w_k = RandomMatrix(8, 8, 73),
               w_v = RandomMatrix(8, 8, 74);
  const Matrix serial = LocalCrossAttentionSerial(q, x, w_q, w_k, w_v, 4);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    EXPECT_EQ(LocalCrossAttention(q, x, w_q, w_k, w_v, 4), serial);
  }
  omp_set_num_threads(saved);
}

TEST(LocalCrossAttentionTest, ShapeErrors) {
  EXPECT_THROW(LocalCrossAttention(Matrix(3, 4), Matrix(16, 4), Identity(4),
                                   Identity(4), Identity(4), 2),
               ShapeError);
  EXPECT_THROW(LocalCrossAttention(Matrix(4, 4), Matrix(16, 4), Identity(3),
                                   Identity(4), Identity(4), 2),
               ShapeError);
}

struct Instance {
  Matrix x;
  std::vector<double> text;
  ProjectorWeights weights;
};

Instance MakeInstance(std::size_t n, std::size_t d, std::size_t s,
                      std::uint64_t seed, std::size_t d_out = 0) {
  const ProjectorDims dims{d, d + 1, d, d_out ? d_out : d, s};
  return {RandomMatrix(n, d, seed + 100, -1, 1), RandomVector(d + 1, seed + 200),
          RandomWeights(dims, seed)};
}

TEST(QueccForwardTest, OutputTokenCounts) {
  for (const auto& [s, m] : {std::pair<std::size_t, std::size_t>{24, 1}, {2, 144}}) {
    const Instance inst = MakeInstance(576, 4, s, 1, 6);
    const Matrix out = QueccForward(inst.x, inst.text, inst.weights);
    EXPECT_EQ(out.rows(), m);
    EXPECT_EQ(out.cols(), 6u);
  }
}

TEST(QueccForwardTest, Deterministic) {
  const Instance a = MakeInstance(64, 8, 4, 3);
  const Instance b = MakeInstance(64, 8, 4, 3);
  EXPECT_EQ(QueccForward(a.x, a.text, a.weights), QueccForward(b.x, b.text, b.weights));
}

TEST(QueccForwardTest, QueryInjectionFeedsQueriesOnly) {
  const Instance inst = MakeInstance(16, 4, 2, 5);
  const ForwardTrace t = QueccForwardTrace(inst.x, inst.text, inst.weights);
  const Matrix expected = LocalCrossAttention(
      ConvDownsample(InjectQuery(inst.x, inst.text, inst.weights.w_query),
                     inst.weights.conv_kernel, 2),
      inst.x, inst.weights.w_q, inst.weights.w_k, inst.weights.w_v, 2);
  EXPECT_EQ(t.attended, expected);

  ProjectorOptions no_inject;
  no_inject.inject_query = false;
  EXPECT_EQ(QueccForwardTrace(inst.x, inst.text, inst.weights, no_inject).injected, inst.x);

  ProjectorOptions injected_kv;
  injected_kv.keys_from_injected = true;
  EXPECT_GT(MaxAbsDiff(QueccForward(inst.x, inst.text, inst.weights, injected_kv),
                       t.output),
            0.0);
}

TEST(QueccForwardTest, RejectsMismatchedWeights) {
  const Instance inst = MakeInstance(16, 4, 2, 5);
  EXPECT_THROW(QueccForward(RandomMatrix(16, 3, 1), inst.text, inst.weights), ShapeError);
  EXPECT_THROW(QueccForward(RandomMatrix(15, 4, 1), inst.text, inst.weights), GridError);
  ProjectorWeights w = inst.weights;
  w.stride = 3;
  EXPECT_THROW(QueccForward(inst.x, inst.text, w), TilingError);
}

TEST(GradCheckTest, SmallInstance) {
  const Instance inst = MakeInstance(16, 4, 2, 7);
  const GradCheckReport r = GradCheck(inst.weights, inst.x, inst.text);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_tensor;
  EXPECT_EQ(r.per_tensor.size(), 9u);
}

TEST(GradCheckTest, UpTo64TokensWidth8) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (const auto& [n, s] : {std::pair<std::size_t, std::size_t>{64, 2}, {64, 4}, {36, 3}}) {
      const Instance inst = MakeInstance(n, 8, s, seed, 5);
      const GradCheckReport r = GradCheck(inst.weights, inst.x, inst.text);
      EXPECT_LT(r.max_rel_error, 1e-4) << n << "/" << s << " " << r.worst_tensor;
    }
  }
}

TEST(GradCheckTest, VariantsAlsoCheck) {
  const Instance inst = MakeInstance(16, 4, 2, 11);
  ProjectorOptions injected_kv;
  injected_kv.keys_from_injected = true;
  EXPECT_LT(GradCheck(inst.weights, inst.x, inst.text, injected_kv).max_rel_error, 1e-4);
  ProjectorOptions no_inject;
  no_inject.inject_query = false;
  EXPECT_LT(GradCheck(inst.weights, inst.x, inst.text, no_inject).max_rel_error, 1e-4);
}

TEST(GradCheckTest, ZeroWeightsGiveZeroOutputGradient) {
  const ProjectorWeights zero = ZeroWeights({4, 5, 4, 3, 2});
  const Instance inst = MakeInstance(16, 4, 2, 13);
  const ProjectorWeights g = QueccSumGradient(inst.x, inst.text, zero);
  for (double v : g.mlp_w2.flat()) EXPECT_EQ(v, 0.0);
}

TEST(GradCheckTest, LinearActivationMatchesTightly) {
  const Instance inst = MakeInstance(16, 4, 2, 17);
  ProjectorOptions linear;
  linear.activation = Activation::kIdentity;
  // Past the softmax every weight enters the output linearly, so central
  // differences are exact up to roundoff. The softmax inputs stay nonlinear.
  const std::set<std::string> linear_path = {"w_v", "mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2"};
  for (const auto& e : GradCheck(inst.weights, inst.x, inst.text, linear).per_tensor) {
    EXPECT_LT(e.max_rel_error, linear_path.count(e.tensor) ? 1e-8 : 1e-4) << e.tensor;
  }
}

TEST(GradCheckTest, NonFiniteGradientNamesTensor) {
  Instance inst = MakeInstance(16, 4, 2, 19);
  inst.weights.mlp_w2(0, 0) = NAN;
  try {
    GradCheck(inst.weights, inst.x, inst.text);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("tensor"), std::string::npos);
  }
}

TEST(QueccCheckTest, SuitePassesAndRejectsBadTiling) {
  const QueccCheckReport r = RunQueccCheck(16, 4, 2, 7);
  EXPECT_TRUE(r.Passed());
  EXPECT_EQ(r.m, 4u);
  EXPECT_THROW(RunQueccCheck(576, 8, 5, 1), TilingError);
  EXPECT_THROW(RunQueccCheck(50, 8, 5, 1), GridError);
}

}  // namespace
}  // namespace tokenscale
