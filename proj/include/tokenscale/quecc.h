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

#ifndef TOKENSCALE_QUECC_H_
#define TOKENSCALE_QUECC_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tokenscale/matrix.h"

namespace tokenscale {

// Reference forward pass of the query-based convolutional cross-attention
// projector. Visual tokens X (n x d, n a perfect square) are laid out on a
// sqrt(n) x sqrt(n) grid in row-major order. The projector
//
//   1. adds a projected text embedding to every token,
//   2. downsamples the result with a depth-wise s x s conv of stride s,
//   3. lets each downsampled token attend over the s*s tokens of its region,
//   4. maps the attended tokens through a two-layer MLP.
//
// Kernels with a `Serial` suffix are single-threaded references for the
// OpenMP versions; both produce bitwise identical results.

enum class Activation { kTanh, kIdentity };

struct ProjectorDims {
  std::size_t d = 0;       // token embedding width
  std::size_t d_text = 0;  // text state width
  std::size_t d_hidden = 0;
  std::size_t d_out = 0;
  std::size_t stride = 1;
};

struct ProjectorWeights {
  Matrix w_query;      // d_text x d
  Matrix conv_kernel;  // d x (s*s): row c holds channel c's kernel, row-major
  Matrix w_q;          // d x d
  Matrix w_k;          // d x d
  Matrix w_v;          // d x d
  Matrix mlp_w1;       // d x d_hidden
  std::vector<double> mlp_b1;
  Matrix mlp_w2;  // d_hidden x d_out
  std::vector<double> mlp_b2;
  std::size_t stride = 1;

  ProjectorDims dims() const;
};

struct ProjectorOptions {
  Activation activation = Activation::kTanh;
  // false emulates the query-free variant.
  bool inject_query = true;
  // Keys and values come from the original X unless this is set.
  bool keys_from_injected = false;
};

// Uniform in [-0.1, 0.1] from `seed`.
ProjectorWeights RandomWeights(const ProjectorDims& dims, std::uint64_t seed);
ProjectorWeights ZeroWeights(const ProjectorDims& dims);
Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                    double lo = -0.1, double hi = 0.1);

// Side length of the token grid; throws GridError if n is not a square.
std::size_t GridSide(std::size_t n);

// Row indices of X covered by downsampled token `region` (s*s of them, in
// row-major order within the block).
std::vector<std::size_t> RegionRows(std::size_t region, std::size_t side,
                                    std::size_t stride);

// X + 1 (text_state * w_query).
Matrix InjectQuery(const Matrix& x, std::span<const double> text_state,
                   const Matrix& w_query);

// Depth-wise conv, kernel = stride = s, no padding, no bias. Output has
// n / s^2 rows in row-major grid order. Throws GridError / TilingError.
Matrix ConvDownsample(const Matrix& x, const Matrix& conv_kernel,
                      std::size_t stride);
Matrix ConvDownsampleSerial(const Matrix& x, const Matrix& conv_kernel,
                            std::size_t stride);

// Single-head scaled dot-product attention of query i against the rows of
// its region: softmax(q_i K^T / sqrt(d)) V.
Matrix LocalCrossAttention(const Matrix& queries, const Matrix& x,
                           const Matrix& w_q, const Matrix& w_k,
                           const Matrix& w_v, std::size_t stride);
Matrix LocalCrossAttentionSerial(const Matrix& queries, const Matrix& x,
                                 const Matrix& w_q, const Matrix& w_k,
                                 const Matrix& w_v, std::size_t stride);

// Softmax weights used by LocalCrossAttention; m x s^2.
Matrix RegionAttentionWeights(const Matrix& queries, const Matrix& x,
                              const Matrix& w_q, const Matrix& w_k,
                              std::size_t stride);

// Every intermediate of one forward pass.
struct ForwardTrace {
  Matrix injected;    // n x d
  Matrix downsampled; // m x d
  Matrix attention;   // m x s^2
  Matrix attended;    // m x d
  Matrix hidden_pre;  // m x d_hidden
  Matrix hidden;      // m x d_hidden
  Matrix output;      // m x d_out
};

ForwardTrace QueccForwardTrace(const Matrix& x,
                               std::span<const double> text_state,
                               const ProjectorWeights& weights,
                               const ProjectorOptions& options = {});

Matrix QueccForward(const Matrix& x, std::span<const double> text_state,
                    const ProjectorWeights& weights,
                    const ProjectorOptions& options = {});

// Gradient of sum(QueccForward(...)) with respect to every weight tensor,
// laid out like ProjectorWeights. Hand-derived backward pass.
ProjectorWeights QueccSumGradient(const Matrix& x,
                                  std::span<const double> text_state,
                                  const ProjectorWeights& weights,
                                  const ProjectorOptions& options = {});

struct TensorGradError {
  std::string tensor;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::vector<TensorGradError> per_tensor;
};

// Compares QueccSumGradient with central differences (step `step`) on every
// weight entry. Relative error is |a - f| / max(|a|, |f|, 1e-6). Throws
// NumericalError naming the tensor if any gradient is not finite.
GradCheckReport GradCheck(const ProjectorWeights& weights, const Matrix& x,
                          std::span<const double> text_state,
                          const ProjectorOptions& options = {},
                          double step = 1e-5);

// Writes a matrix as CSV without a header.
void WriteMatrixCsv(std::ostream& out, const Matrix& m);

}  // namespace tokenscale

#endif  // TOKENSCALE_QUECC_H_
