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

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <utility>

#include "text_util.h"
#include "tokenscale/errors.h"

namespace tokenscale {
namespace {

std::size_t CheckTiling(std::size_t n, std::size_t stride) {
  const std::size_t side = GridSide(n);
  if (stride == 0 || side % stride != 0) {
    throw TilingError("stride " + std::to_string(stride) +
                      " does not divide grid side " + std::to_string(side));
  }
  return side;
}

void CheckConvShapes(const Matrix& x, const Matrix& conv_kernel,
                     std::size_t stride) {
  if (conv_kernel.rows() != x.cols() ||
      conv_kernel.cols() != stride * stride) {
    throw ShapeError("conv kernel must be d x s^2");
  }
}

void CheckAttentionShapes(const Matrix& queries, const Matrix& x,
                          const Matrix& w_q, const Matrix& w_k,
                          const Matrix& w_v, std::size_t stride) {
  CheckTiling(x.rows(), stride);
  if (queries.rows() * stride * stride != x.rows()) {
    throw ShapeError("need one query per s x s region");
  }
  if (queries.cols() != x.cols() || w_q.rows() != x.cols() ||
      w_k.rows() != x.cols() || w_v.rows() != x.cols() ||
      w_q.cols() != w_k.cols()) {
    throw ShapeError("attention projection shapes disagree");
  }
}

void ConvRegion(const Matrix& x, const Matrix& kernel, std::size_t side,
                std::size_t stride, std::size_t region, Matrix& out) {
  const auto rows = RegionRows(region, side, stride);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) sum += kernel(c, k) * x(rows[k], c);
    out(region, c) = sum;
  }
}

// Row vector times matrix.
void RowTimes(std::span<const double> v, const Matrix& w, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < w.rows(); ++k) {
    const double vk = v[k];
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += vk * w(k, j);
  }
}

// Per-region projections and softmax. Shared by every attention entry point
// so serial and parallel paths do the same arithmetic.
struct RegionAttention {
  std::vector<std::size_t> rows;
  std::vector<double> q;  // d_k
  Matrix keys;            // s^2 x d_k
  Matrix values;          // s^2 x d_v
  std::vector<double> p;  // s^2
};

RegionAttention AttendRegion(const Matrix& queries, const Matrix& x,
                             const Matrix& w_q, const Matrix& w_k,
                             const Matrix& w_v, std::size_t side,
                             std::size_t stride, std::size_t region) {
  RegionAttention ra;
  ra.rows = RegionRows(region, side, stride);
  const std::size_t count = ra.rows.size();
  ra.q.resize(w_q.cols());
  RowTimes(queries.row(region), w_q, ra.q);
  ra.keys = Matrix(count, w_k.cols());
  ra.values = Matrix(count, w_v.cols());
  ra.p.resize(count);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    RowTimes(x.row(ra.rows[j]), w_k, ra.keys.row(j));
    RowTimes(x.row(ra.rows[j]), w_v, ra.values.row(j));
    double score = 0.0;
    for (std::size_t c = 0; c < ra.q.size(); ++c) score += ra.q[c] * ra.keys(j, c);
    ra.p[j] = score * inv_sqrt_d;
    max_score = std::max(max_score, ra.p[j]);
  }
  double total = 0.0;
  for (double& e : ra.p) {
    e = std::exp(e - max_score);
    total += e;
  }
  for (double& e : ra.p) e /= total;
  return ra;
}

void WriteAttended(const RegionAttention& ra, std::size_t region, Matrix& out) {
  for (std::size_t c = 0; c < out.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t j = 0; j < ra.p.size(); ++j) sum += ra.p[j] * ra.values(j, c);
    out(region, c) = sum;
  }
}

double Activate(Activation f, double v) {
  return f == Activation::kTanh ? std::tanh(v) : v;
}

double ActivateDerivative(Activation f, double v) {
  if (f == Activation::kIdentity) return 1.0;
  const double t = std::tanh(v);
  return 1.0 - t * t;
}

void CheckWeights(const ProjectorWeights& w, std::size_t d,
                  std::size_t text_dim) {
  const ProjectorDims dims = w.dims();
  if (dims.d != d || w.w_query.rows() != text_dim ||
      w.conv_kernel.rows() != d ||
      w.conv_kernel.cols() != w.stride * w.stride || w.w_q.rows() != d ||
      w.w_k.rows() != d || w.w_v.rows() != d || w.w_q.cols() != w.w_k.cols() ||
      w.w_v.cols() != d || w.mlp_w1.rows() != d ||
      w.mlp_b1.size() != w.mlp_w1.cols() ||
      w.mlp_w2.rows() != w.mlp_w1.cols() ||
      w.mlp_b2.size() != w.mlp_w2.cols()) {
    throw ShapeError("projector weights do not match input dimensions");
  }
}

double SumAll(const Matrix& m) {
  double total = 0.0;
  for (double v : m.flat()) total += v;
  return total;
}

std::vector<std::pair<std::string, std::span<double>>> NamedTensors(
    ProjectorWeights& w) {
  return {{"w_query", w.w_query.flat()}, {"conv_kernel", w.conv_kernel.flat()},
          {"w_q", w.w_q.flat()},         {"w_k", w.w_k.flat()},
          {"w_v", w.w_v.flat()},         {"mlp_w1", w.mlp_w1.flat()},
          {"mlp_b1", w.mlp_b1},          {"mlp_w2", w.mlp_w2.flat()},
          {"mlp_b2", w.mlp_b2}};
}

}  // namespace

ProjectorDims ProjectorWeights::dims() const {
  return {w_q.rows(), w_query.rows(), mlp_w1.cols(), mlp_w2.cols(), stride};
}

Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                    double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}

ProjectorWeights ZeroWeights(const ProjectorDims& dims) {
  ProjectorWeights w;
  w.w_query = Matrix(dims.d_text, dims.d);
  w.conv_kernel = Matrix(dims.d, dims.stride * dims.stride);
  w.w_q = Matrix(dims.d, dims.d);
  w.w_k = Matrix(dims.d, dims.d);
  w.w_v = Matrix(dims.d, dims.d);
  w.mlp_w1 = Matrix(dims.d, dims.d_hidden);
  w.mlp_b1.assign(dims.d_hidden, 0.0);
  w.mlp_w2 = Matrix(dims.d_hidden, dims.d_out);
  w.mlp_b2.assign(dims.d_out, 0.0);
  w.stride = dims.stride;
  return w;
}

ProjectorWeights RandomWeights(const ProjectorDims& dims, std::uint64_t seed) {
  ProjectorWeights w = ZeroWeights(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (auto& [name, values] : NamedTensors(w)) {
    for (double& v : values) v = dist(rng);
  }
  return w;
}

std::size_t GridSide(std::size_t n) {
  auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (n == 0 || side * side != n) {
    throw GridError(std::to_string(n) + " tokens do not form a square grid");
  }
  return side;
}

std::vector<std::size_t> RegionRows(std::size_t region, std::size_t side,
                                    std::size_t stride) {
  const std::size_t blocks_per_row = side / stride;
  const std::size_t top = (region / blocks_per_row) * stride;
  const std::size_t left = (region % blocks_per_row) * stride;
  std::vector<std::size_t> rows;
  rows.reserve(stride * stride);
  for (std::size_t a = 0; a < stride; ++a) {
    for (std::size_t b = 0; b < stride; ++b) {
      rows.push_back((top + a) * side + left + b);
    }
  }
  return rows;
}

Matrix InjectQuery(const Matrix& x, std::span<const double> text_state,
                   const Matrix& w_query) {
  if (text_state.size() != w_query.rows() || w_query.cols() != x.cols()) {
    throw ShapeError("text state / query projection shape mismatch");
  }
  std::vector<double> shift(x.cols());
  RowTimes(text_state, w_query, shift);
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += shift[c];
  }
  return out;
}

Matrix ConvDownsample(const Matrix& x, const Matrix& conv_kernel,
                      std::size_t stride) {
  const std::size_t side = CheckTiling(x.rows(), stride);
  CheckConvShapes(x, conv_kernel, stride);
  const std::size_t m = x.rows() / (stride * stride);
  Matrix out(m, x.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
    ConvRegion(x, conv_kernel, side, stride, static_cast<std::size_t>(i), out);
  }
  return out;
}

Matrix ConvDownsampleSerial(const Matrix& x, const Matrix& conv_kernel,
                            std::size_t stride) {
  const std::size_t side = CheckTiling(x.rows(), stride);
  CheckConvShapes(x, conv_kernel, stride);
  const std::size_t m = x.rows() / (stride * stride);
  Matrix out(m, x.cols());
  for (std::size_t i = 0; i < m; ++i) {
    ConvRegion(x, conv_kernel, side, stride, i, out);
  }
  return out;
}

Matrix LocalCrossAttention(const Matrix& queries, const Matrix& x,
                           const Matrix& w_q, const Matrix& w_k,
                           const Matrix& w_v, std::size_t stride) {
  CheckAttentionShapes(queries, x, w_q, w_k, w_v, stride);
  const std::size_t side = GridSide(x.rows());
  Matrix out(queries.rows(), w_v.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.rows()); ++i) {
    const auto region = static_cast<std::size_t>(i);
    WriteAttended(AttendRegion(queries, x, w_q, w_k, w_v, side, stride, region),
                  region, out);
  }
  return out;
}

Matrix LocalCrossAttentionSerial(const Matrix& queries, const Matrix& x,
                                 const Matrix& w_q, const Matrix& w_k,
                                 const Matrix& w_v, std::size_t stride) {
  CheckAttentionShapes(queries, x, w_q, w_k, w_v, stride);
  const std::size_t side = GridSide(x.rows());
  Matrix out(queries.rows(), w_v.cols());
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    WriteAttended(AttendRegion(queries, x, w_q, w_k, w_v, side, stride, i), i,
                  out);
  }
  return out;
}

Matrix RegionAttentionWeights(const Matrix& queries, const Matrix& x,
                              const Matrix& w_q, const Matrix& w_k,
                              std::size_t stride) {
  const Matrix w_v(x.cols(), 1);
  CheckAttentionShapes(queries, x, w_q, w_k, w_v, stride);
  const std::size_t side = GridSide(x.rows());
  Matrix weights(queries.rows(), stride * stride);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(queries.rows()); ++i) {
    const auto region = static_cast<std::size_t>(i);
    const auto ra = AttendRegion(queries, x, w_q, w_k, w_v, side, stride, region);
    std::copy(ra.p.begin(), ra.p.end(), weights.row(region).begin());
  }
  return weights;
}

ForwardTrace QueccForwardTrace(const Matrix& x,
                               std::span<const double> text_state,
                               const ProjectorWeights& weights,
                               const ProjectorOptions& options) {
  CheckTiling(x.rows(), weights.stride);
  CheckWeights(weights, x.cols(), text_state.size());
  ForwardTrace t;
  t.injected = options.inject_query
                   ? InjectQuery(x, text_state, weights.w_query)
                   : x;
  const Matrix& kv = options.keys_from_injected ? t.injected : x;
  t.downsampled = ConvDownsample(t.injected, weights.conv_kernel, weights.stride);
  t.attention = RegionAttentionWeights(t.downsampled, kv, weights.w_q,
                                       weights.w_k, weights.stride);
  t.attended = LocalCrossAttention(t.downsampled, kv, weights.w_q, weights.w_k,
                                   weights.w_v, weights.stride);
  t.hidden_pre = MatMul(t.attended, weights.mlp_w1);
  t.hidden = Matrix(t.hidden_pre.rows(), t.hidden_pre.cols());
  for (std::size_t i = 0; i < t.hidden.rows(); ++i) {
    for (std::size_t j = 0; j < t.hidden.cols(); ++j) {
      t.hidden_pre(i, j) += weights.mlp_b1[j];
      t.hidden(i, j) = Activate(options.activation, t.hidden_pre(i, j));
    }
  }
  t.output = MatMul(t.hidden, weights.mlp_w2);
  for (std::size_t i = 0; i < t.output.rows(); ++i) {
    for (std::size_t j = 0; j < t.output.cols(); ++j) {
      t.output(i, j) += weights.mlp_b2[j];
    }
  }
  return t;
}

Matrix QueccForward(const Matrix& x, std::span<const double> text_state,
                    const ProjectorWeights& weights,
                    const ProjectorOptions& options) {
  return QueccForwardTrace(x, text_state, weights, options).output;
}

ProjectorWeights QueccSumGradient(const Matrix& x,
                                  std::span<const double> text_state,
                                  const ProjectorWeights& weights,
                                  const ProjectorOptions& options) {
  const ForwardTrace t = QueccForwardTrace(x, text_state, weights, options);
  const Matrix& kv = options.keys_from_injected ? t.injected : x;
  const std::size_t m = t.output.rows();
  const std::size_t d = x.cols();
  const std::size_t side = GridSide(x.rows());
  const std::size_t s = weights.stride;
  ProjectorWeights g = ZeroWeights(weights.dims());

  // Output layer: dL/dY = 1.
  Matrix d_hidden_pre(m, t.hidden.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < t.output.cols(); ++j) g.mlp_b2[j] += 1.0;
    for (std::size_t h = 0; h < t.hidden.cols(); ++h) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < t.output.cols(); ++j) {
        g.mlp_w2(h, j) += t.hidden(i, h);
        row_sum += weights.mlp_w2(h, j);
      }
      d_hidden_pre(i, h) =
          row_sum * ActivateDerivative(options.activation, t.hidden_pre(i, h));
    }
  }

  // First MLP layer.
  Matrix d_attended(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t h = 0; h < t.hidden.cols(); ++h) {
      const double dh = d_hidden_pre(i, h);
      g.mlp_b1[h] += dh;
      for (std::size_t c = 0; c < d; ++c) {
        g.mlp_w1(c, h) += t.attended(i, c) * dh;
        d_attended(i, c) += dh * weights.mlp_w1(c, h);
      }
    }
  }

  // Region attention.
  Matrix d_downsampled(m, d);
  Matrix d_kv(kv.rows(), d);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < m; ++i) {
    const RegionAttention ra = AttendRegion(t.downsampled, kv, weights.w_q,
                                            weights.w_k, weights.w_v, side, s, i);
    const std::size_t count = ra.rows.size();
    const std::size_t dk = ra.q.size();
    std::vector<double> dp(count);
    double weighted = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t c = 0; c < d; ++c) dp[j] += d_attended(i, c) * ra.values(j, c);
      weighted += ra.p[j] * dp[j];
    }
    std::vector<double> dq(dk, 0.0);
    for (std::size_t j = 0; j < count; ++j) {
      const double dscore = ra.p[j] * (dp[j] - weighted) * inv_sqrt_d;
      const auto x_row = kv.row(ra.rows[j]);
      // value and key projection gradients
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          g.w_v(r, c) += x_row[r] * ra.p[j] * d_attended(i, c);
        }
        for (std::size_t c = 0; c < dk; ++c) {
          g.w_k(r, c) += x_row[r] * dscore * ra.q[c];
        }
      }
      for (std::size_t c = 0; c < dk; ++c) dq[c] += dscore * ra.keys(j, c);
      if (options.keys_from_injected) {
        for (std::size_t r = 0; r < d; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            acc += ra.p[j] * d_attended(i, c) * weights.w_v(r, c);
          }
          for (std::size_t c = 0; c < dk; ++c) {
            acc += dscore * ra.q[c] * weights.w_k(r, c);
          }
          d_kv(ra.rows[j], r) += acc;
        }
      }
    }
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < dk; ++c) {
        g.w_q(r, c) += t.downsampled(i, r) * dq[c];
        acc += dq[c] * weights.w_q(r, c);
      }
      d_downsampled(i, r) = acc;
    }
  }

  // Depth-wise conv.
  Matrix d_injected = options.keys_from_injected ? d_kv : Matrix(x.rows(), d);
  for (std::size_t i = 0; i < m; ++i) {
    const auto rows = RegionRows(i, side, s);
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t k = 0; k < rows.size(); ++k) {
        g.conv_kernel(c, k) += d_downsampled(i, c) * t.injected(rows[k], c);
        d_injected(rows[k], c) += d_downsampled(i, c) * weights.conv_kernel(c, k);
      }
    }
  }

  // Query injection: every token receives the same shift.
  if (options.inject_query) {
    std::vector<double> col_sum(d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < d; ++c) col_sum[c] += d_injected(r, c);
    }
    for (std::size_t a = 0; a < text_state.size(); ++a) {
      for (std::size_t c = 0; c < d; ++c) g.w_query(a, c) = text_state[a] * col_sum[c];
    }
  }
  return g;
}

GradCheckReport GradCheck(const ProjectorWeights& weights, const Matrix& x,
                          std::span<const double> text_state,
                          const ProjectorOptions& options, double step) {
  ProjectorWeights analytic = QueccSumGradient(x, text_state, weights, options);
  ProjectorWeights probe = weights;
  auto analytic_tensors = NamedTensors(analytic);
  auto probe_tensors = NamedTensors(probe);

  GradCheckReport report;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    const auto& [name, values] = probe_tensors[t];
    const auto grad = analytic_tensors[t].second;
    TensorGradError entry{name, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const Matrix plus = QueccForward(x, text_state, probe, options);
      values[i] = saved - step;
      const Matrix minus = QueccForward(x, text_state, probe, options);
      values[i] = saved;
      // Differencing per output entry keeps the cancellation at the scale of
      // one output rather than the whole sum.
      double delta = 0.0;
      for (std::size_t k = 0; k < plus.flat().size(); ++k) {
        delta += plus.flat()[k] - minus.flat()[k];
      }
      const double numeric = delta / (2.0 * step);
      if (!std::isfinite(grad[i]) || !std::isfinite(numeric)) {
        throw NumericalError("non-finite gradient in tensor " + name);
      }
      const double denom =
          std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
      entry.max_rel_error =
          std::max(entry.max_rel_error, std::abs(grad[i] - numeric) / denom);
    }
    if (entry.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = entry.max_rel_error;
      report.worst_tensor = name;
    }
    report.per_tensor.push_back(entry);
  }
  return report;
}

void WriteMatrixCsv(std::ostream& out, const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << internal::FormatDouble(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace tokenscale
