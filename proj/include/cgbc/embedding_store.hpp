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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cgbc {

enum class Role { kClass, kPrompt, kImage, kConcept };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

// Named matrix of binary32 embedding rows. Immutable once constructed; the
// constructor enforces every invariant (unique names, finite values, unit rows
// when flagged normalized), so any live instance is valid.
class EmbeddingContainer {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingContainer(Role role, std::size_t dim, std::vector<std::string> names,
                     std::vector<float> rows, bool normalized);

  Role role() const noexcept { return role_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return names_.size(); }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  std::span<const float> row(std::size_t i) const;
  std::span<const float> data() const noexcept { return rows_; }

  std::optional<std::size_t> find(std::string_view name) const;

 private:
  Role role_;
  std::size_t dim_;
  std::vector<std::string> names_;
  std::vector<float> rows_;
  bool normalized_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Dense row-major similarity block, values[i * cols + j].
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// `path` names the manifest (`<name>.manifest.json`); the data file is
// resolved relative to it.
EmbeddingContainer load_container(const std::filesystem::path& path);

// Writes `<name>.manifest.json` and `<name>.f32` next to it. A path without
// the manifest suffix is treated as the bare `<name>`. Returns the manifest path.
std::filesystem::path save_container(const EmbeddingContainer& c,
                                     const std::filesystem::path& path);

EmbeddingContainer l2_normalize(const EmbeddingContainer& c);

// values[i][j] = <a_i, b_j>; both inputs must be normalized.
SimilarityMatrix cosine_sim(const EmbeddingContainer& a, const EmbeddingContainer& b);

double dot(std::span<const float> a, std::span<const float> b);

// (s + 1) / 2, clamping s to [-1, 1] first.
double sim_to_prob(double s);

}  // namespace cgbc
