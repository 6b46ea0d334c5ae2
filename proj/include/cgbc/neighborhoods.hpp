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
#include <string>
#include <vector>

#include "cgbc/embedding_store.hpp"
#include "json.hpp"

namespace cgbc {

// Hard-negative neighborhood of every class: the classes whose name
// embeddings are most similar to it, most similar first.
struct NeighborhoodTable {
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<std::vector<double>> similarities;
  std::vector<std::string> warnings;

  std::vector<std::string> neighbor_names(std::size_t cls) const;
};

inline constexpr std::size_t kDefaultNeighborhoodSize = 10;

// Top-`h` most similar other classes for each class. Ties go to the lower
// class index. When h exceeds K - 1 every other class is returned and a
// warning is recorded.
NeighborhoodTable build_neighborhoods(const EmbeddingContainer& classes, std::size_t h);

// [{class, neighbors: [{name, cosine}]}]
nlohmann::ordered_json to_json(const NeighborhoodTable& table);
NeighborhoodTable neighborhoods_from_json(const nlohmann::json& j);

}  // namespace cgbc
