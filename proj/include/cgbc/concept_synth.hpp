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
#include <string>
#include <string_view>
#include <vector>

#include "cgbc/embedding_provider.hpp"
#include "cgbc/llm_client.hpp"
#include "json.hpp"

namespace cgbc {

struct PromptPair {
  std::string system;
  std::string user;
};

inline constexpr std::size_t kDefaultConceptsPerCall = 10;
inline constexpr std::size_t kDefaultAtomCapacity = 50;
inline constexpr double kDefaultDedupThreshold = 0.9;
inline constexpr std::string_view kConceptPrefix = "The final concept is: ";
inline constexpr std::string_view kCompositionConnective = " or ";

// Contrastive prompt: the core class against its hard-negative neighbors.
PromptPair render_contrastive_prompt(std::string_view class_name,
                                     const std::vector<std::string>& neighbors,
                                     std::size_t per_call = kDefaultConceptsPerCall);

// Neighbor-free variant used as the descriptive ablation.
PromptPair render_descriptive_prompt(std::string_view class_name,
                                     std::size_t per_call = kDefaultConceptsPerCall);

// Extracts concept lines from between the <concepts begin> / </concepts end>
// markers. The "The final concept is: " prefix is stripped when present;
// lines without it are kept as-is (after trimming).
std::vector<std::string> parse_concepts(std::string_view response);

struct CallRecord {
  std::string digest;
  std::string response;
};

struct ConceptPool {
  std::string class_name;
  std::vector<std::string> atoms;
  std::vector<std::vector<float>> atom_embeddings;  // parallel to atoms
  std::size_t capacity = kDefaultAtomCapacity;
  std::vector<CallRecord> call_log;
};

struct Rejection {
  std::string text;
  std::string reason;  // "duplicate", "capacity" or "empty"
  double similarity = 0.0;
};

struct DedupResult {
  std::vector<std::string> inserted;
  std::vector<Rejection> rejected;
};

// Inserts candidates in order, each iff its max cosine to every retained atom
// is <= threshold and the pool is below capacity.
DedupResult dedup_insert(ConceptPool& pool, const std::vector<std::string>& candidates,
                         const EmbeddingProvider& embed, double threshold = kDefaultDedupThreshold);

enum class PromptStyle { kContrastive, kDescriptive };

struct GenerationOptions {
  std::string model = "gpt-4.1";
  std::size_t capacity = kDefaultAtomCapacity;
  std::size_t max_calls = 10;
  std::size_t per_call = kDefaultConceptsPerCall;
  double dedup_threshold = kDefaultDedupThreshold;
  std::size_t max_parse_failures = 3;
  PromptStyle style = PromptStyle::kContrastive;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  ConceptPool pool;
  std::size_t calls = 0;
  std::size_t parse_failures = 0;
  std::vector<std::string> warnings;
};

// render -> call -> parse -> dedup until the pool is full or the call budget
// is spent. Unparseable replies are skipped until max_parse_failures is
// exceeded, then the ParseError propagates.
GenerationResult generate_atoms(const std::string& class_name,
                                const std::vector<std::string>& neighbors, LlmClient& llm,
                                const EmbeddingProvider& embed, const GenerationOptions& opt);

struct CompositeConcept {
  std::string class_name;
  std::vector<std::size_t> atom_indices;  // ascending
  std::string text;
};

struct CompositionResult {
  std::vector<CompositeConcept> composites;  // in sampling order
  std::vector<std::string> warnings;
};

// Samples `num_combos` distinct `atoms_per`-subsets of the pool uniformly
// without replacement. Returns every subset (with a warning) when fewer exist.
CompositionResult compose(const ConceptPool& pool, std::size_t atoms_per, std::size_t num_combos,
                          std::uint64_t seed);

// "A photo of a <class> with <concept>."
std::string render_prompt(std::string_view class_name, std::string_view concept_text);

nlohmann::ordered_json to_json(const ConceptPool& pool);
ConceptPool pool_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const std::string& class_name,
                               const std::vector<CompositeConcept>& composites);
std::vector<CompositeConcept> composites_from_json(const nlohmann::json& j);

}  // namespace cgbc
