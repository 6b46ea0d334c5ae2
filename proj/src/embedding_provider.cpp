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


#include "cgbc/embedding_provider.hpp"

#include <charconv>
#include <stdexcept>

#include "cgbc/error.hpp"
#include "cgbc/fixtures.hpp"

namespace cgbc {

ContainerEmbeddingProvider::ContainerEmbeddingProvider(EmbeddingContainer container)
    : container_(std::move(container)) {
  if (!container_.normalized()) throw DataError("embedding lookup container must be normalized");
}

std::vector<float> ContainerEmbeddingProvider::embed(const std::string& text) const {
  auto idx = container_.find(text);
  if (!idx) throw DataError("no pre-encoded embedding for text '" + text + "'");
  auto r = container_.row(*idx);
  return {r.begin(), r.end()};
}

EmbeddingContainer embed_all(const EmbeddingProvider& provider,
                             const std::vector<std::string>& texts, Role role) {
  std::vector<float> rows;
  rows.reserve(texts.size() * provider.dim());
  for (const auto& t : texts) {
    auto v = provider.embed(t);
    if (v.size() != provider.dim()) throw DataError("provider returned wrong dimension for '" + t + "'");
    rows.insert(rows.end(), v.begin(), v.end());
  }
  return EmbeddingContainer(role, provider.dim(), texts, std::move(rows), true);
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec) {
  if (spec == "hash") return std::make_unique<HashEmbeddingProvider>();
  if (spec.starts_with("hash:")) {
    auto num = spec.substr(5);
    std::size_t dim = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), dim);
    if (ec != std::errc() || p != num.data() + num.size() || dim == 0) {
      throw std::invalid_argument("bad hash embedder dimension '" + std::string(num) + "'");
    }
    return std::make_unique<HashEmbeddingProvider>(dim);
  }
  if (spec.starts_with("container:")) {
    return std::make_unique<ContainerEmbeddingProvider>(
        load_container(std::filesystem::path(std::string(spec.substr(10)))));
  }
  throw std::invalid_argument("unknown embedder '" + std::string(spec) +
                              "' (expected hash[:dim] or container:<manifest>)");
}

}  // namespace cgbc
