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


#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <mutex>
#include <set>

#include "cgbc/concept_synth.hpp"
#include "cgbc/embedding_provider.hpp"
#include "cgbc/error.hpp"
#include "cgbc/fixtures.hpp"
#include "cgbc/llm_client.hpp"
#include "test_util.hpp"

namespace cgbc {
namespace {

// Every distinct text gets its own basis vector, so distinct texts are
// orthogonal and only byte-identical texts collide.
class OrthogonalStub final : public EmbeddingProvider {
 public:
  explicit OrthogonalStub(std::size_t dim = 256) : dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  std::vector<float> embed(const std::string& text) const override {
    std::lock_guard lock(mu_);
    auto [it, _] = ids_.emplace(text, ids_.size());
    if (it->second >= dim_) throw std::runtime_error("stub out of dimensions");
    std::vector<float> v(dim_, 0.0f);
    v[it->second] = 1.0f;
    return v;
  }

 private:
  std::size_t dim_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::size_t> ids_;
};

class FailingStub final : public EmbeddingProvider {
 public:
  std::size_t dim() const override { return 4; }
  std::vector<float> embed(const std::string&) const override { throw std::runtime_error("boom"); }
};

// Hands out scripted replies in order and records the requests.
class ScriptedLlm final : public LlmClient {
 public:
  explicit ScriptedLlm(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const ChatRequest& req) override {
    requests.push_back(req);
    if (next_ >= replies_.size()) throw TransportError("script exhausted");
    return replies_[next_++];
  }
  std::vector<ChatRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

std::string reply(const std::vector<std::string>& concepts) {
  std::string s = "<concepts begin>\n";
  for (const auto& c : concepts) s += "The final concept is: " + c + "\n";
  return s + "</concepts end>";
}

TEST(Prompts, ContrastiveUserText) {
  const auto p = render_contrastive_prompt("beagle", {"basset hound"});
  EXPECT_NE(p.user.find("Core class: beagle. Other classes: basset hound."), std::string::npos) << p.user;
  EXPECT_NE(p.system.find("Your response must follow this exact format"), std::string::npos);
  EXPECT_NE(p.system.find("<concepts begin>"), std::string::npos);
  const auto q = render_contrastive_prompt("beagle", {"basset hound", "foxhound"});
  EXPECT_NE(q.user.find("Other classes: basset hound, foxhound."), std::string::npos);
  EXPECT_THROW(render_contrastive_prompt("x", {}), std::invalid_argument);
  EXPECT_THROW(render_contrastive_prompt("  ", {"a"}), std::invalid_argument);
}

TEST(Prompts, DescriptiveTemplate) {
  const auto p = render_descriptive_prompt("beagle");
  EXPECT_EQ(p.user.rfind("Core class: beagle. Please generate 10 unique and descriptive concepts", 0), 0u)
      << p.user;
  EXPECT_EQ(p.system.find("Other classes"), std::string::npos);
  EXPECT_EQ(p.user.find("Other classes"), std::string::npos);
  const auto q = render_descriptive_prompt("beagle");
  EXPECT_EQ(p.system, q.system);
  EXPECT_EQ(p.user, q.user);
  EXPECT_THROW(render_descriptive_prompt(""), std::invalid_argument);
}

TEST(ParseConcepts, WellFormed) {
  const auto c = parse_concepts(
      "<concepts begin>\nThe final concept is: droopy long ears\nThe final concept is: tricolor coat\n</concepts end>");
  EXPECT_EQ(c, (std::vector<std::string>{"droopy long ears", "tricolor coat"}));
}

TEST(ParseConcepts, LenientAndErrors) {
  const auto c = parse_concepts("preamble\n<concepts begin>\n  bare line  \n\n\nThe final concept is:  x \n</concepts end>\ntrailer");
  EXPECT_EQ(c, (std::vector<std::string>{"bare line", "x"}));
  EXPECT_THROW(parse_concepts("no markers at all"), ParseError);
  EXPECT_THROW(parse_concepts("<concepts begin>\nThe final concept is: a\n"), ParseError);
  try {
    parse_concepts("<concepts begin>\n  \n</concepts end>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.raw_text(), "<concepts begin>\n  \n</concepts end>");
  }
}

TEST(ParseConcepts, RenderParseRoundTrip) {
  for (std::size_t n = 1; n <= 30; ++n) {
    std::vector<std::string> in;
    for (std::size_t i = 0; i < n; ++i) in.push_back("concept number " + std::to_string(i));
    EXPECT_EQ(parse_concepts(reply(in)), in);
  }
}

TEST(Dedup, DuplicateRejected) {
  OrthogonalStub stub;
  ConceptPool pool;
  pool.capacity = 50;
  auto r = dedup_insert(pool, {"droopy ears", "droopy ears", "  ", "tricolor"}, stub);
  EXPECT_EQ(pool.atoms, (std::vector<std::string>{"droopy ears", "tricolor"}));
  ASSERT_EQ(r.rejected.size(), 2u);
  EXPECT_EQ(r.rejected[0].reason, "duplicate");
  EXPECT_DOUBLE_EQ(r.rejected[0].similarity, 1.0);
  EXPECT_EQ(r.rejected[1].reason, "empty");
}

TEST(Dedup, OrthogonalAllInsertedUpToCapacity) {
  OrthogonalStub stub;
  ConceptPool pool;
  pool.capacity = 50;
  std::vector<std::string> c;
  for (int i = 0; i < 60; ++i) c.push_back("atom " + std::to_string(i));
  auto r = dedup_insert(pool, c, stub);
  EXPECT_EQ(pool.atoms.size(), 50u);
  EXPECT_EQ(r.inserted.size(), 50u);
  ASSERT_EQ(r.rejected.size(), 10u);
  for (const auto& rej : r.rejected) EXPECT_EQ(rej.reason, "capacity");
  EXPECT_EQ(pool.atoms.front(), "atom 0");
  EXPECT_EQ(pool.atoms.back(), "atom 49");
}

TEST(Dedup, ThresholdAndErrors) {
  const HashEmbeddingProvider hash(64);
  ConceptPool pool;
  pool.capacity = 100;
  // "a b c d e f g h i j" vs the same plus one token: cosine ~0.95.
  auto r = dedup_insert(pool, {"a b c d e f g h i j", "a b c d e f g h i j k"}, hash);
  EXPECT_EQ(pool.atoms.size(), 1u);
  ConceptPool loose;
  loose.capacity = 100;
  dedup_insert(loose, {"a b c d e f g h i j", "a b c d e f g h i j k"}, hash, 1.0);
  EXPECT_EQ(loose.atoms.size(), 2u);
  EXPECT_THROW(dedup_insert(pool, {"x"}, hash, 0.0), std::invalid_argument);
  EXPECT_THROW(dedup_insert(pool, {"x"}, hash, 1.5), std::invalid_argument);
  FailingStub bad;
  try {
    dedup_insert(pool, {"offending text"}, bad);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("offending text"), std::string::npos);
  }
}

TEST(Dedup, RetainedAtomsRespectThreshold) {
  const HashEmbeddingProvider hash(32);
  ConceptPool pool;
  pool.capacity = 200;
  std::vector<std::string> c;
  const char* words[] = {"red", "fur", "ear", "tail", "eye", "paw", "nose", "coat"};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) c.push_back(std::string(words[i]) + " " + words[j]);
  dedup_insert(pool, c, hash, 0.8);
  for (std::size_t i = 0; i < pool.atoms.size(); ++i)
    for (std::size_t j = i + 1; j < pool.atoms.size(); ++j)
      EXPECT_LE(dot(pool.atom_embeddings[i], pool.atom_embeddings[j]), 0.8);
}

TEST(GenerateAtoms, ReplaySixCallsTenDuplicates) {
  testing::TempDir dir("gen");
  GenerationOptions opt;
  const auto prompt = render_contrastive_prompt("beagle", {"basset hound"});
  const auto digest = request_digest({opt.model, prompt.system, prompt.user, std::nullopt});
  nlohmann::json fixture = nlohmann::json::array();
  int next = 0;
  for (int call = 0; call < 6; ++call) {
    std::vector<std::string> batch;
    for (int t = 0; t < 10; ++t) {
      // Calls 1..5 each repeat two concepts of the previous call.
      if (call > 0 && t < 2) batch.push_back("concept " + std::to_string(next - 10 + t));
      else batch.push_back("concept " + std::to_string(next++));
    }
    fixture.push_back({{"digest", digest}, {"response", reply(batch)}});
  }
  std::ofstream(dir.path() / "fx.json") << fixture.dump();
  ReplayLlmClient llm(dir.path() / "fx.json");
  OrthogonalStub stub;
  const auto res = generate_atoms("beagle", {"basset hound"}, llm, stub, opt);
  EXPECT_EQ(res.calls, 6u);
  EXPECT_EQ(res.pool.atoms.size(), 50u);
  EXPECT_EQ(res.pool.call_log.size(), 6u);
  EXPECT_EQ(res.pool.call_log[0].digest, digest);
  EXPECT_TRUE(res.warnings.empty());
  std::set<std::string> uniq(res.pool.atoms.begin(), res.pool.atoms.end());
  EXPECT_EQ(uniq.size(), 50u);
}

TEST(GenerateAtoms, BudgetWarning) {
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("c" + std::to_string(i));
  ScriptedLlm llm({reply(ten)});
  OrthogonalStub stub;
  GenerationOptions opt;
  opt.max_calls = 1;
  const auto res = generate_atoms("beagle", {"basset hound"}, llm, stub, opt);
  EXPECT_EQ(res.pool.atoms.size(), 10u);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("capacity not reached"), std::string::npos);
  ASSERT_EQ(llm.requests.size(), 1u);
  EXPECT_EQ(llm.requests[0].model, "gpt-4.1");
  EXPECT_TRUE(llm.requests[0].seed.has_value());
}

TEST(GenerateAtoms, ReplayMissNamesDigest) {
  testing::TempDir dir("miss");
  std::ofstream(dir.path() / "fx.json") << R"([{"digest":"abc","response":"x"}])";
  ReplayLlmClient llm(dir.path() / "fx.json");
  OrthogonalStub stub;
  const auto prompt = render_contrastive_prompt("beagle", {"basset hound"});
  const auto digest = request_digest({"gpt-4.1", prompt.system, prompt.user, std::nullopt});
  try {
    generate_atoms("beagle", {"basset hound"}, llm, stub, GenerationOptions{});
    FAIL();
  } catch (const ReplayMissError& e) {
    EXPECT_EQ(e.digest(), digest);
    EXPECT_NE(std::string(e.what()).find(digest), std::string::npos);
  }
}

TEST(GenerateAtoms, ParseFailuresSkippedThenFatal) {
  std::vector<std::string> ten;
  for (int i = 0; i < 10; ++i) ten.push_back("c" + std::to_string(i));
  ScriptedLlm ok({"garbage", reply(ten)});
  OrthogonalStub stub;
  GenerationOptions opt;
  opt.max_calls = 2;
  const auto res = generate_atoms("a", {"b"}, ok, stub, opt);
  EXPECT_EQ(res.parse_failures, 1u);
  EXPECT_EQ(res.pool.atoms.size(), 10u);
  ScriptedLlm bad({"x", "y", "z", "w"});
  opt.max_calls = 10;
  opt.max_parse_failures = 3;
  EXPECT_THROW(generate_atoms("a", {"b"}, bad, stub, opt), ParseError);
}

TEST(GenerateAtoms, DescriptiveStyleUsesDescriptivePrompt) {
  ScriptedLlm llm({reply({"x"})});
  OrthogonalStub stub;
  GenerationOptions opt;
  opt.max_calls = 1;
  opt.style = PromptStyle::kDescriptive;
  generate_atoms("beagle", {}, llm, stub, opt);
  EXPECT_EQ(llm.requests[0].user.find("Other classes"), std::string::npos);
}

ConceptPool pool_of(std::size_t n) {
  ConceptPool p;
  p.class_name = "beagle";
  p.capacity = n;
  for (std::size_t i = 0; i < n; ++i) p.atoms.push_back("atom" + std::to_string(i));
  return p;
}

TEST(Compose, FiveHundredDistinctTriples) {
  const auto res = compose(pool_of(50), 3, 500, 42);
  ASSERT_EQ(res.composites.size(), 500u);
  std::set<std::vector<std::size_t>> sets;
  for (const auto& c : res.composites) {
    ASSERT_EQ(c.atom_indices.size(), 3u);
    EXPECT_TRUE(std::is_sorted(c.atom_indices.begin(), c.atom_indices.end()));
    EXPECT_EQ(std::adjacent_find(c.atom_indices.begin(), c.atom_indices.end()), c.atom_indices.end());
    EXPECT_EQ(c.text, "atom" + std::to_string(c.atom_indices[0]) + " or atom" +
                          std::to_string(c.atom_indices[1]) + " or atom" + std::to_string(c.atom_indices[2]));
    sets.insert(c.atom_indices);
  }
  EXPECT_EQ(sets.size(), 500u);
  EXPECT_TRUE(res.warnings.empty());
}

TEST(Compose, Exhaustion) {
  const auto res = compose(pool_of(3), 3, 10, 1);
  ASSERT_EQ(res.composites.size(), 1u);
  EXPECT_EQ(res.composites[0].atom_indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_FALSE(res.warnings.empty());
  const auto small = compose(pool_of(6), 3, 20, 1);  // C(6,3) = 20 exactly
  EXPECT_EQ(small.composites.size(), 20u);
  EXPECT_TRUE(small.warnings.empty());
}

TEST(Compose, DeterministicAndErrors) {
  const auto a = compose(pool_of(20), 3, 100, 9);
  const auto b = compose(pool_of(20), 3, 100, 9);
  const auto c = compose(pool_of(20), 3, 100, 10);
  ASSERT_EQ(a.composites.size(), b.composites.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.composites.size(); ++i) {
    EXPECT_EQ(a.composites[i].text, b.composites[i].text);
    differs = differs || a.composites[i].text != c.composites[i].text;
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(compose(pool_of(2), 3, 5, 0), std::invalid_argument);
  EXPECT_THROW(compose(pool_of(5), 0, 5, 0), std::invalid_argument);
}

TEST(Compose, SamplingCoversSubsetsUniformly) {
  // 6 atoms, pairs: 15 subsets. Drawing 1 per seed, each subset should appear
  // near 1/15 of the time.
  std::map<std::vector<std::size_t>, int> counts;
  const int n = 15000;
  for (int s = 0; s < n; ++s) counts[compose(pool_of(6), 2, 1, s).composites[0].atom_indices]++;
  EXPECT_EQ(counts.size(), 15u);
  for (const auto& [k, v] : counts) EXPECT_NEAR(v, n / 15.0, 5 * std::sqrt(n / 15.0));
}

TEST(RenderPrompt, Template) {
  EXPECT_EQ(render_prompt("beagle", "droopy long ears or tricolor coat"),
            "A photo of a beagle with droopy long ears or tricolor coat.");
  EXPECT_EQ(render_prompt("beagle", "droopy long ears"), "A photo of a beagle with droopy long ears.");
  EXPECT_EQ(render_prompt("great white shark", "a fin"), "A photo of a great white shark with a fin.");
  EXPECT_THROW(render_prompt("", "x"), std::invalid_argument);
}

TEST(PoolJson, RoundTrip) {
  auto p = pool_of(4);
  const auto back = pool_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(back.class_name, "beagle");
  EXPECT_EQ(back.atoms, p.atoms);
  EXPECT_THROW(pool_from_json(nlohmann::json::parse(R"({"class":"a","atoms":["x","x"]})")), DataError);
  EXPECT_THROW(pool_from_json(nlohmann::json::parse(R"({"atoms":[]})")), DataError);
  const auto comps = compose(p, 2, 3, 0).composites;
  const auto cj = composites_from_json(nlohmann::json::parse(to_json("beagle", comps).dump()));
  ASSERT_EQ(cj.size(), 3u);
  EXPECT_EQ(cj[1].text, comps[1].text);
  EXPECT_EQ(cj[1].atom_indices, comps[1].atom_indices);
}

}  // namespace
}  // namespace cgbc
