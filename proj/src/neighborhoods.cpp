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


#include "cgbc/neighborhoods.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "cgbc/error.hpp"
#include "cgbc/parallel.hpp"

namespace cgbc {

std::vector<std::string> NeighborhoodTable::neighbor_names(std::size_t cls) const {
  std::vector<std::string> out;
  out.reserve(neighbors.at(cls).size());
  for (std::size_t j : neighbors[cls]) out.push_back(class_names[j]);
  return out;
}

NeighborhoodTable build_neighborhoods(const EmbeddingContainer& classes, std::size_t h) {
  const std::size_t k = classes.count();
  if (k < 2) throw std::invalid_argument("neighborhoods need at least 2 classes");
  if (h < 1) throw std::invalid_argument("neighborhood size H must be >= 1");
  if (!classes.normalized()) throw DataError("class embeddings must be normalized");

  NeighborhoodTable table;
  table.class_names = classes.names();
  table.neighbors.resize(k);
  table.similarities.resize(k);
  const std::size_t take = std::min(h, k - 1);
  if (h > k - 1) {
    table.warnings.push_back("H=" + std::to_string(h) + " exceeds K-1=" + std::to_string(k - 1) +
                             "; returning all other classes");
    spdlog::warn("{}", table.warnings.back());
  }

  parallel_for(k, [&](std::size_t i) {
    std::vector<double> sims(k);
    for (std::size_t j = 0; j < k; ++j) sims[j] = dot(classes.row(i), classes.row(j));
    std::vector<std::size_t> order;
    order.reserve(k - 1);
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
                      });
    order.resize(take);
    table.similarities[i].reserve(take);
    for (std::size_t j : order) table.similarities[i].push_back(sims[j]);
    table.neighbors[i] = std::move(order);
  });
  return table;
}

nlohmann::ordered_json to_json(const NeighborhoodTable& table) {
  auto out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < table.class_names.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["class"] = table.class_names[i];
    auto list = nlohmann::ordered_json::array();
    for (std::size_t n = 0; n < table.neighbors[i].size(); ++n) {
      nlohmann::ordered_json nb;
      nb["name"] = table.class_names[table.neighbors[i][n]];
      nb["cosine"] = table.similarities[i][n];
      list.push_back(std::move(nb));
    }
    entry["neighbors"] = std::move(list);
    out.push_back(std::move(entry));
  }
  return out;
}

NeighborhoodTable neighborhoods_from_json(const nlohmann::json& j) {
  NeighborhoodTable table;
  try {
    for (const auto& entry : j) table.class_names.push_back(entry.at("class").get<std::string>());
    for (const auto& entry : j) {
      std::vector<std::size_t> idx;
      std::vector<double> sims;
      for (const auto& nb : entry.at("neighbors")) {
        const auto name = nb.at("name").get<std::string>();
        auto it = std::find(table.class_names.begin(), table.class_names.end(), name);
        if (it == table.class_names.end()) throw DataError("unknown neighbor class '" + name + "'");
        idx.push_back(static_cast<std::size_t>(it - table.class_names.begin()));
        sims.push_back(nb.at("cosine").get<double>());
      }
      table.neighbors.push_back(std::move(idx));
      table.similarities.push_back(std::move(sims));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("neighborhood report schema error: ") + e.what());
  }
  return table;
}

}  // namespace cgbc
