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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cgbc/embedding_store.hpp"

namespace cgbc {

// Maps text to a unit-norm embedding. Implementations must be deterministic
// and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> embed(const std::string& text) const = 0;
};

// Looks texts up by name in a pre-encoded container (e.g. one produced by the
// Python encoder). Unknown texts are a DataError.
class ContainerEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit ContainerEmbeddingProvider(EmbeddingContainer container);
  std::size_t dim() const override { return container_.dim(); }
  std::vector<float> embed(const std::string& text) const override;

 private:
  EmbeddingContainer container_;
};

// Embeds `texts` in order into a normalized container whose names are the texts.
EmbeddingContainer embed_all(const EmbeddingProvider& provider,
                             const std::vector<std::string>& texts, Role role);

// "hash" / "hash:<dim>" selects the deterministic token-hash stub;
// "container:<manifest>" a pre-encoded lookup table.
std::unique_ptr<EmbeddingProvider> make_embedding_provider(std::string_view spec);

}  // namespace cgbc
