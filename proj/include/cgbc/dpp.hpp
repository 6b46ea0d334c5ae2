// Copyright 2026 The CGBC Authors
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


#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cgbc/embedding_store.hpp"

namespace cgbc {

inline constexpr double kDefaultDppJitter = 1e-8;

// Symmetric PSD L-ensemble kernel, row-major n x n with jitter on the diagonal.
struct DppKernel {
  std::size_t n = 0;
  std::vector<double> gram;
  double jitter = 0.0;

  double at(std::size_t i, std::size_t j) const { return gram[i * n + j]; }

  // Wraps an explicit matrix; `jitter` is added to the diagonal. Throws if the
  // matrix is not square or not symmetric within 1e-6.
  static DppKernel from_matrix(std::size_t n, std::vector<double> values, double jitter = 0.0);
};

// Gram kernel <phi_j, phi_u> of normalized item embeddings, plus jitter * I.
DppKernel build_kernel(const EmbeddingContainer& items, double jitter = kDefaultDppJitter);

struct DppSelection {
  std::vector<std::size_t> indices;    // in selection order
  std::vector<double> marginal_gains;  // log-det gain of each step
  bool stopped_early = false;
  std::vector<std::string> warnings;
};

// Greedy MAP inference: repeatedly adds the item with the largest log-det gain,
// maintaining an incremental Cholesky factor (O(n * m^2)). Ties go to the lower
// index. Stops early when every remaining gain falls below
// log(gain_floor_scale * jitter) (or a 1e-10 relative floor for jitter-free kernels).
DppSelection greedy_map(const DppKernel& kernel, std::size_t m, double gain_floor_scale = 100.0);

// Log-determinant of the principal submatrix on `subset`, via Cholesky;
// -infinity when the submatrix is singular.
double log_det(const DppKernel& kernel, std::span<const std::size_t> subset);

}  // namespace cgbc
