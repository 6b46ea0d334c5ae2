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


#include "cgbc/dpp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgbc/error.hpp"

namespace cgbc {

DppKernel DppKernel::from_matrix(std::size_t n, std::vector<double> values, double jitter) {
  if (values.size() != n * n) throw std::invalid_argument("kernel matrix must be n x n");
  if (jitter < 0.0) throw std::invalid_argument("kernel jitter must be non-negative");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(values[i * n + j] - values[j * n + i]) > 1e-6) {
        throw DataError("kernel is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
      }
    }
    values[i * n + i] += jitter;
  }
  return DppKernel{n, std::move(values), jitter};
}

DppKernel build_kernel(const EmbeddingContainer& items, double jitter) {
  if (!items.normalized()) throw DataError("DPP kernel needs normalized embeddings");
  if (items.count() == 0) throw std::invalid_argument("DPP kernel needs at least one item");
  const std::size_t n = items.count();
  std::vector<double> g(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      g[i * n + j] = g[j * n + i] = dot(items.row(i), items.row(j));
    }
  }
  return DppKernel::from_matrix(n, std::move(g), jitter);
}

DppSelection greedy_map(const DppKernel& kernel, std::size_t m, double gain_floor_scale) {
  const std::size_t n = kernel.n;
  if (m == 0) throw std::invalid_argument("selection size must be >= 1");
  if (m > n) {
    throw std::invalid_argument("selection size " + std::to_string(m) + " exceeds " +
                                std::to_string(n) + " candidates");
  }
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, kernel.at(i, i));
  const double tol = 1e-9 * std::max(max_diag, 1.0);
  const double floor = std::max(gain_floor_scale * kernel.jitter, 1e-10 * max_diag);

  // d2[i]: squared residual of item i against the selected set (Schur
  // complement); c[i]: its row of the Cholesky factor so far.
  std::vector<double> d2(n);
  std::vector<std::vector<double>> c(n);
  std::vector<bool> taken(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = kernel.at(i, i);
    if (d2[i] < -tol) throw DataError("kernel is not PSD: negative diagonal at " + std::to_string(i));
    c[i].reserve(m);
  }

  DppSelection sel;
  while (sel.indices.size() < m) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && (best == n || d2[i] > d2[best])) best = i;
    }
    if (d2[best] < -tol) {
      throw DataError("kernel is not PSD: negative pivot " + std::to_string(d2[best]) +
                      " at item " + std::to_string(best));
    }
    if (d2[best] <= floor) {
      sel.stopped_early = true;
      sel.warnings.push_back("DPP stopped after " + std::to_string(sel.indices.size()) + " of " +
                             std::to_string(m) + " items: remaining marginal gains vanish");
      spdlog::warn("{}", sel.warnings.back());
      break;
    }
    taken[best] = true;
    sel.indices.push_back(best);
    sel.marginal_gains.push_back(std::log(d2[best]));
    if (sel.indices.size() == m) break;

    const double root = std::sqrt(d2[best]);
    const auto& cb = c[best];
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double acc = kernel.at(best, i);
      for (std::size_t t = 0; t < cb.size(); ++t) acc -= cb[t] * c[i][t];
      const double e = acc / root;
      c[i].push_back(e);
      d2[i] -= e * e;
    }
  }
  return sel;
}

double log_det(const DppKernel& kernel, std::span<const std::size_t> subset) {
  const std::size_t k = subset.size();
  for (std::size_t i : subset) {
    if (i >= kernel.n) throw std::out_of_range("subset index " + std::to_string(i) + " out of range");
  }
  std::vector<double> l(k * k, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = kernel.at(subset[i], subset[j]);
      for (std::size_t t = 0; t < j; ++t) s -= l[i * k + t] * l[j * k + t];
      if (i == j) {
        if (s <= 0.0) return -std::numeric_limits<double>::infinity();
        l[i * k + i] = std::sqrt(s);
        acc += std::log(s);
      } else {
        l[i * k + j] = s / l[j * k + j];
      }
    }
  }
  return acc;
}

}  // namespace cgbc
