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


#include "cgbc/concept_synth.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cgbc/error.hpp"
#include "cgbc/rng.hpp"

namespace cgbc {
namespace {

constexpr std::string_view kBeginMarker = "<concepts begin>";
constexpr std::string_view kEndMarker = "</concepts end>";

constexpr std::string_view kContrastiveSystem =
    R"(You are a visual concept proposer tasked with enhancing text descriptions for zero-shot image classification on the test dataset using CLIP.

Given:
- A core class from the test dataset
- The set of other classes in the dataset

Task:
Propose concise, visually discriminative concepts to append to the text description (i.e., "A photo of {core class} with {your concept}") that help CLIP better distinguish the core class from the other classes.

Guidelines:
- Analyze the unique visual characteristics of the core class compared to other classes
- Propose concepts that capture these discriminative visual features.
- Ensure concepts are concrete, easily understandable by CLIP, and specific to the test dataset.
- Each concept should enable CLIP to more accurately classify images of the core class while minimizing confusion with other classes.

IMPORTANT: Your response must follow this exact format:

<concepts begin>
concept1
concept2
concept3
</concepts end>

Rules:
- Start with <concepts begin> and end with </concepts end>
- Each concept should be on a new line
- Each concept MUST start with "The final concept is: "
- Ensure concepts are clear, specific, and relevant to the core class
- Avoid generic or ambiguous concepts
- Each concept should be unique and distinct from others
- Keep each concept brief (ideally ≤6 words), specific, and easy for CLIP to parse.)";

constexpr std::string_view kDescriptiveSystem =
    R"(You are a visual concept proposer tasked with enhancing text descriptions for zero-shot image classification on the test dataset using CLIP.

Given:
- A class from the test dataset

Task:
Propose descriptive concepts to append to the text description (i.e., "A photo of {core class} with {your concept}") that help CLIP better understand and recognize the core class.

Guidelines:
- Focus on the visual characteristics and attributes of the core class itself.
- Generate descriptive concepts that capture various aspects, appearances, or contexts of the core class.
- Ensure concepts are concrete, easily understandable by CLIP, and specific to the test dataset.
- Think about different visual perspectives, settings, or attributes that describe the core class.

IMPORTANT: Your response must follow this exact format:

<concepts begin>
concept1
concept2
concept3
</concepts end>

Rules:
- Start with <concepts begin> and end with </concepts end>
- Each concept should be on a new line
- Each concept MUST start with "The final concept is: "
- Ensure concepts are clear, specific, and relevant to the given class
- Avoid generic or ambiguous concepts
- Each concept should be unique and distinct from others
- Keep each concept brief (ideally ≤6 words), specific, and easy for CLIP to parse.)";

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// C(n, k), saturating at `cap`.
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    if (c > std::numeric_limits<std::uint64_t>::max() / (n - i)) return cap;
    c = c * (n - i) / (i + 1);
    if (c >= cap) return cap;
  }
  return static_cast<std::uint64_t>(c);
}

void enumerate_subsets(std::size_t n, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<std::size_t> sample_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  perm.resize(k);
  std::sort(perm.begin(), perm.end());
  return perm;
}

}  // namespace

PromptPair render_contrastive_prompt(std::string_view class_name,
                                     const std::vector<std::string>& neighbors,
                                     std::size_t per_call) {
  if (trim(class_name).empty()) throw std::invalid_argument("empty class name");
  if (neighbors.empty()) {
    throw std::invalid_argument("contrastive prompt for '" + std::string(class_name) +
                                "' needs at least one neighbor class");
  }
  PromptPair p;
  p.system = std::string(kContrastiveSystem);
  p.user = "Core class: " + std::string(class_name) + ". Other classes: " + join(neighbors, ", ") +
           ". Please generate " + std::to_string(per_call) +
           " unique and visually discriminative concepts. Follow the required format and rules.";
  return p;
}

PromptPair render_descriptive_prompt(std::string_view class_name, std::size_t per_call) {
  if (trim(class_name).empty()) throw std::invalid_argument("empty class name");
  PromptPair p;
  p.system = std::string(kDescriptiveSystem);
  p.user = "Core class: " + std::string(class_name) + ". Please generate " +
           std::to_string(per_call) +
           " unique and descriptive concepts that capture different visual aspects of this class.";
  return p;
}

std::vector<std::string> parse_concepts(std::string_view response) {
  const auto begin = response.find(kBeginMarker);
  const auto end = begin == std::string_view::npos
                       ? std::string_view::npos
                       : response.find(kEndMarker, begin + kBeginMarker.size());
  if (begin == std::string_view::npos || end == std::string_view::npos) {
    throw ParseError("LLM reply lacks <concepts begin>/</concepts end> markers",
                     std::string(response));
  }
  std::string_view block = response.substr(begin + kBeginMarker.size(),
                                           end - begin - kBeginMarker.size());
  const std::string_view bare_prefix = trim(kConceptPrefix);
  std::vector<std::string> out;
  while (!block.empty()) {
    const auto nl = block.find('\n');
    std::string_view line = trim(block.substr(0, nl));
    block = nl == std::string_view::npos ? std::string_view{} : block.substr(nl + 1);
    if (line.starts_with(bare_prefix)) line = trim(line.substr(bare_prefix.size()));
    if (!line.empty()) out.emplace_back(line);
  }
  if (out.empty()) throw ParseError("LLM reply contains no concepts", std::string(response));
  return out;
}

DedupResult dedup_insert(ConceptPool& pool, const std::vector<std::string>& candidates,
                         const EmbeddingProvider& embed, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("dedup threshold must lie in (0, 1]");
  }
  DedupResult result;
  for (const auto& raw : candidates) {
    std::string text(trim(raw));
    if (text.empty()) {
      result.rejected.push_back({raw, "empty", 0.0});
      continue;
    }
    if (pool.atoms.size() >= pool.capacity) {
      result.rejected.push_back({text, "capacity", 0.0});
      continue;
    }
    std::vector<float> e;
    try {
      e = embed.embed(text);
    } catch (const std::exception& ex) {
      throw DataError("embedding provider failed on concept '" + text + "': " + ex.what());
    }
    double best = -1.0;
    for (const auto& other : pool.atom_embeddings) best = std::max(best, dot(e, other));
    if (best > threshold) {
      result.rejected.push_back({text, "duplicate", best});
      continue;
    }
    pool.atoms.push_back(text);
    pool.atom_embeddings.push_back(std::move(e));
    result.inserted.push_back(std::move(text));
  }
  return result;
}

GenerationResult generate_atoms(const std::string& class_name,
                                const std::vector<std::string>& neighbors, LlmClient& llm,
                                const EmbeddingProvider& embed, const GenerationOptions& opt) {
  if (opt.max_calls == 0) throw std::invalid_argument("max_calls must be >= 1");
  const PromptPair prompt = opt.style == PromptStyle::kContrastive
                                ? render_contrastive_prompt(class_name, neighbors, opt.per_call)
                                : render_descriptive_prompt(class_name, opt.per_call);
  GenerationResult res;
  res.pool.class_name = class_name;
  res.pool.capacity = opt.capacity;
  while (res.pool.atoms.size() < opt.capacity && res.calls < opt.max_calls) {
    ChatRequest req{opt.model, prompt.system, prompt.user, derive_seed(opt.seed, {res.calls})};
    std::string reply = llm.complete(req);
    ++res.calls;
    res.pool.call_log.push_back({request_digest(req), reply});
    std::vector<std::string> concepts;
    try {
      concepts = parse_concepts(reply);
    } catch (const ParseError& e) {
      if (++res.parse_failures > opt.max_parse_failures) throw;
      res.warnings.push_back(class_name + ": skipped unparseable reply on call " +
                             std::to_string(res.calls) + ": " + e.what());
      spdlog::warn("{}", res.warnings.back());
      continue;
    }
    dedup_insert(res.pool, concepts, embed, opt.dedup_threshold);
  }
  if (res.pool.atoms.size() < opt.capacity) {
    res.warnings.push_back(class_name + ": capacity not reached (" +
                           std::to_string(res.pool.atoms.size()) + "/" +
                           std::to_string(opt.capacity) + " atoms after " +
                           std::to_string(res.calls) + " calls)");
    spdlog::warn("{}", res.warnings.back());
  }
  return res;
}

CompositionResult compose(const ConceptPool& pool, std::size_t atoms_per, std::size_t num_combos,
                          std::uint64_t seed) {
  const std::size_t n = pool.atoms.size();
  if (atoms_per == 0 || num_combos == 0) {
    throw std::invalid_argument("atoms_per and num_combos must be >= 1");
  }
  if (atoms_per > n) {
    throw std::invalid_argument("atoms_per=" + std::to_string(atoms_per) + " exceeds pool size " +
                                std::to_string(n) + " for '" + pool.class_name + "'");
  }
  Rng rng(seed);
  CompositionResult res;
  std::vector<std::vector<std::size_t>> sets;
  const std::uint64_t cap = std::uint64_t{num_combos} * 4 + 1;
  const std::uint64_t total = binomial_capped(n, atoms_per, cap);
  if (total < cap) {
    // Few enough subsets to list: a shuffled enumeration is a uniform draw
    // without replacement.
    enumerate_subsets(n, atoms_per, sets);
    std::shuffle(sets.begin(), sets.end(), rng);
    if (sets.size() < num_combos) {
      res.warnings.push_back(pool.class_name + ": only " + std::to_string(sets.size()) +
                             " distinct combinations exist; requested " +
                             std::to_string(num_combos));
      spdlog::warn("{}", res.warnings.back());
    } else {
      sets.resize(num_combos);
    }
  } else {
    std::set<std::vector<std::size_t>> seen;
    while (sets.size() < num_combos) {
      auto s = sample_subset(n, atoms_per, rng);
      if (seen.insert(s).second) sets.push_back(std::move(s));
    }
  }
  res.composites.reserve(sets.size());
  for (auto& s : sets) {
    std::vector<std::string> parts;
    for (std::size_t i : s) parts.push_back(pool.atoms[i]);
    res.composites.push_back(
        {pool.class_name, std::move(s), join(parts, kCompositionConnective)});
  }
  return res;
}

std::string render_prompt(std::string_view class_name, std::string_view concept_text) {
  if (class_name.empty() || concept_text.empty()) {
    throw std::invalid_argument("render_prompt needs a class name and a concept");
  }
  return "A photo of a " + std::string(class_name) + " with " + std::string(concept_text) + ".";
}

nlohmann::ordered_json to_json(const ConceptPool& pool) {
  nlohmann::ordered_json j;
  j["class"] = pool.class_name;
  j["atoms"] = pool.atoms;
  return j;
}

ConceptPool pool_from_json(const nlohmann::json& j) {
  try {
    ConceptPool pool;
    pool.class_name = j.at("class").get<std::string>();
    pool.atoms = j.at("atoms").get<std::vector<std::string>>();
    pool.capacity = std::max(pool.atoms.size(), kDefaultAtomCapacity);
    std::set<std::string> seen;
    for (const auto& a : pool.atoms) {
      if (trim(a).empty()) throw DataError("empty atom in pool for '" + pool.class_name + "'");
      if (!seen.insert(a).second) throw DataError("duplicate atom '" + a + "'");
    }
    return pool;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("concept pool schema error: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const std::string& class_name,
                               const std::vector<CompositeConcept>& composites) {
  nlohmann::ordered_json j;
  j["class"] = class_name;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : composites) {
    nlohmann::ordered_json e;
    e["atoms"] = c.atom_indices;
    e["text"] = c.text;
    arr.push_back(std::move(e));
  }
  j["composites"] = std::move(arr);
  return j;
}

std::vector<CompositeConcept> composites_from_json(const nlohmann::json& j) {
  try {
    std::vector<CompositeConcept> out;
    const auto cls = j.at("class").get<std::string>();
    for (const auto& e : j.at("composites")) {
      out.push_back({cls, e.at("atoms").get<std::vector<std::size_t>>(),
                     e.at("text").get<std::string>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("composite report schema error: ") + e.what());
  }
}

}  // namespace cgbc
