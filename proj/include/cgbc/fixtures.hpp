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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cgbc/classifier.hpp"
#include "cgbc/embedding_provider.hpp"
#include "cgbc/embedding_store.hpp"

namespace cgbc {

// Deterministic stand-in for a text encoder: each lowercase alphanumeric
// token maps to a fixed Gaussian direction (seeded by its FNV-1a hash); a
// text embeds as the normalized sum of its tokens. Texts sharing words are
// similar, word order is ignored.
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = 64);
  std::size_t dim() const override { return dim_; }
  std::vector<float> embed(const std::string& text) const override;

 private:
  std::size_t dim_;
};

std::uint64_t fnv1a64(std::string_view s);

struct SyntheticDatasetSpec {
  std::size_t k = 8;
  std::size_t m_per_class = 16;
  std::size_t n_images = 256;
  std::size_t dim = 64;
  double margin = 0.5;         // class anchors have pairwise cosine <= 1 - margin
  double noise_sigma = 1.0;    // image noise norm, relative to the unit anchor
  double prompt_sigma = 0.5;   // clean prompt noise norm
  double outlier_rate = 0.0;   // fraction of each class's prompts replaced by random directions
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  EmbeddingContainer classes;
  ClassPromptSet prompts;
  std::vector<std::vector<bool>> planted;  // per class, per prompt
  EmbeddingContainer images;
  std::vector<std::size_t> labels;
};

SyntheticDataset make_synthetic(const SyntheticDatasetSpec& spec);

// classes / images containers, prompts/<class>.manifest.json, prompt_set.json,
// labels.json ({image_name: class_index}) and planted.json.
void write_synthetic(const SyntheticDataset& ds, const std::filesystem::path& dir);

// Reads a prompt_set.json ([{class, container}]) with container paths
// relative to the file.
ClassPromptSet load_prompt_set(const std::filesystem::path& path);

// {image_name: class_index}, resolved against the image container's names.
std::vector<std::size_t> load_labels(const std::filesystem::path& path,
                                     const EmbeddingContainer& images,
                                     const std::vector<std::string>& class_names);

// Writes the small replayable end-to-end demo: class and image containers,
// labels, a recorded LLM fixture keyed to the contrastive prompts, and run.json.
void write_demo_fixture(const std::filesystem::path& dir);

}  // namespace cgbc
