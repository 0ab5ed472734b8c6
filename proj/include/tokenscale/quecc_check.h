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

#ifndef TOKENSCALE_QUECC_CHECK_H_
#define TOKENSCALE_QUECC_CHECK_H_

#include <cstddef>
#include <cstdint>
#include <string>

namespace tokenscale {

inline constexpr double kSoftmaxTolerance = 1e-12;
inline constexpr double kExactTolerance = 1e-12;
inline constexpr double kGradTolerance = 1e-4;

struct QueccCheckReport {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t stride = 0;
  std::size_t m = 0;
  bool shape_table_ok = false;
  double softmax_max_dev = 0.0;
  double identical_region_max_dev = 0.0;
  double permutation_max_dev = 0.0;
  bool parallel_matches_serial = false;
  double grad_max_rel_error = 0.0;
  std::string grad_worst_tensor;

  bool Passed() const {
    return shape_table_ok && softmax_max_dev <= kSoftmaxTolerance &&
           identical_region_max_dev <= kExactTolerance &&
           permutation_max_dev <= kExactTolerance && parallel_matches_serial &&
           grad_max_rel_error < kGradTolerance;
  }
};

// Runs the projector invariant suite on a seeded random instance with n
// tokens of width d and stride s: the 576-token shape table, softmax
// normalization, identical-region and key/value permutation checks,
// serial/parallel agreement and the finite-difference gradient check.
// Throws GridError / TilingError for an invalid (n, s).
QueccCheckReport RunQueccCheck(std::size_t n, std::size_t d, std::size_t stride,
                               std::uint64_t seed);

}  // namespace tokenscale

#endif  // TOKENSCALE_QUECC_CHECK_H_
