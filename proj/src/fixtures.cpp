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


#include "cgbc/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "cgbc/concept_synth.hpp"
#include "cgbc/error.hpp"
#include "cgbc/llm_client.hpp"
#include "cgbc/neighborhoods.hpp"
#include "cgbc/rng.hpp"
#include "json.hpp"

namespace cgbc {
namespace {

std::vector<float> random_unit(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double sq = 0.0;
  for (double& x : v) {
    x = g(rng);
    sq += x * x;
  }
  const double inv = 1.0 / std::sqrt(sq);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

// normalize(base + N(0, (sigma^2 / dim) I)); the noise has expected norm sigma.
std::vector<float> perturb(std::span<const float> base, double sigma, Rng& rng) {
  std::normal_distribution<double> g(0.0, sigma / std::sqrt(static_cast<double>(base.size())));
  std::vector<double> v(base.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    v[i] = base[i] + g(rng);
    sq += v[i] * v[i];
  }
  const double inv = 1.0 / std::sqrt(sq);
  std::vector<float> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::string class_label(std::size_t i) {
  std::string s = std::to_string(i);
  return "class_" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

std::string padded(std::size_t i, std::size_t width) {
  std::string s = std::to_string(i);
  return std::string(s.size() < width ? width - s.size() : 0, '0') + s;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("embedding dimension must be >= 1");
}

std::vector<float> HashEmbeddingProvider::embed(const std::string& text) const {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) tokens.push_back(text);

  std::vector<double> acc(dim_, 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& t : tokens) {
    Rng rng(fnv1a64(t));
    for (double& x : acc) x += g(rng);
  }
  double sq = 0.0;
  for (double x : acc) sq += x * x;
  const double inv = 1.0 / std::sqrt(sq);
  std::vector<float> out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

void SyntheticDatasetSpec::validate() const {
  if (k < 2 || m_per_class < 1 || dim < 1) throw std::invalid_argument("synthetic spec needs K >= 2, M >= 1, dim >= 1");
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be >= 0");
  if (!(outlier_rate >= 0.0 && outlier_rate < 0.5)) throw std::invalid_argument("outlier_rate must lie in [0, 0.5)");
  if (!(noise_sigma >= 0.0 && prompt_sigma >= 0.0)) throw std::invalid_argument("noise must be >= 0");
}

SyntheticDataset make_synthetic(const SyntheticDatasetSpec& spec) {
  spec.validate();
  const double cap = 1.0 - spec.margin;
  constexpr int kMaxAttempts = 10000;

  Rng anchor_rng = make_stream(spec.seed, {0});
  std::vector<std::vector<float>> anchors;
  for (std::size_t i = 0; i < spec.k; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      auto cand = random_unit(spec.dim, anchor_rng);
      placed = std::all_of(anchors.begin(), anchors.end(),
                           [&](const auto& a) { return dot(a, cand) <= cap; });
      if (placed) anchors.push_back(std::move(cand));
    }
    if (!placed) {
      throw DataError("cannot place " + std::to_string(spec.k) + " anchors in dim " +
                      std::to_string(spec.dim) + " with pairwise cosine <= " + std::to_string(cap));
    }
  }

  std::vector<std::string> class_names;
  std::vector<float> class_rows;
  for (std::size_t i = 0; i < spec.k; ++i) {
    class_names.push_back(class_label(i));
    class_rows.insert(class_rows.end(), anchors[i].begin(), anchors[i].end());
  }

  ClassPromptSet prompts;
  prompts.class_names = class_names;
  std::vector<std::vector<bool>> planted(spec.k);
  const auto n_out = static_cast<std::size_t>(
      std::llround(spec.outlier_rate * static_cast<double>(spec.m_per_class)));
  for (std::size_t i = 0; i < spec.k; ++i) {
    Rng rng = make_stream(spec.seed, {1, i});
    std::vector<std::size_t> order(spec.m_per_class);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    planted[i].assign(spec.m_per_class, false);
    for (std::size_t t = 0; t < n_out; ++t) planted[i][order[t]] = true;

    std::vector<std::string> names;
    std::vector<float> rows;
    for (std::size_t j = 0; j < spec.m_per_class; ++j) {
      names.push_back(class_names[i] + "/p" + padded(j, 2));
      auto v = planted[i][j] ? random_unit(spec.dim, rng) : perturb(anchors[i], spec.prompt_sigma, rng);
      rows.insert(rows.end(), v.begin(), v.end());
    }
    prompts.prompts.emplace_back(Role::kPrompt, spec.dim, std::move(names), std::move(rows), true);
  }

  Rng img_rng = make_stream(spec.seed, {2});
  std::vector<std::string> img_names;
  std::vector<float> img_rows;
  std::vector<std::size_t> labels;
  for (std::size_t n = 0; n < spec.n_images; ++n) {
    const std::size_t y = n % spec.k;
    img_names.push_back("img_" + padded(n, 5));
    auto v = perturb(anchors[y], spec.noise_sigma, img_rng);
    img_rows.insert(img_rows.end(), v.begin(), v.end());
    labels.push_back(y);
  }

  return SyntheticDataset{
      EmbeddingContainer(Role::kClass, spec.dim, class_names, std::move(class_rows), true),
      std::move(prompts), std::move(planted),
      EmbeddingContainer(Role::kImage, spec.dim, std::move(img_names), std::move(img_rows), true),
      std::move(labels)};
}

void write_synthetic(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "prompts");
  save_container(ds.classes, dir / "classes.manifest.json");
  save_container(ds.images, dir / "images.manifest.json");
  nlohmann::ordered_json set = nlohmann::ordered_json::array();
  nlohmann::ordered_json planted = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ds.prompts.num_classes(); ++i) {
    const auto& name = ds.prompts.class_names[i];
    const std::string rel = "prompts/" + name + ".manifest.json";
    save_container(ds.prompts.prompts[i], dir / rel);
    set.push_back({{"class", name}, {"container", rel}});
    std::vector<int> flags(ds.planted[i].begin(), ds.planted[i].end());
    planted[name] = flags;
  }
  write_json(dir / "prompt_set.json", set);
  write_json(dir / "planted.json", planted);
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (std::size_t n = 0; n < ds.labels.size(); ++n) labels[ds.images.names()[n]] = ds.labels[n];
  write_json(dir / "labels.json", labels);
}

ClassPromptSet load_prompt_set(const std::filesystem::path& path) {
  const auto j = read_json(path);
  ClassPromptSet set;
  try {
    for (const auto& e : j) {
      set.class_names.push_back(e.at("class").get<std::string>());
      set.prompts.push_back(load_container(path.parent_path() / e.at("container").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("prompt set " + path.string() + " schema error: " + e.what());
  }
  set.validate();
  return set;
}

std::vector<std::size_t> load_labels(const std::filesystem::path& path,
                                     const EmbeddingContainer& images,
                                     const std::vector<std::string>& class_names) {
  const auto j = read_json(path);
  if (!j.is_object()) throw DataError("labels file must map image names to class indices");
  std::vector<std::size_t> labels(images.count());
  std::vector<bool> seen(images.count(), false);
  for (const auto& [name, value] : j.items()) {
    auto idx = images.find(name);
    if (!idx) throw DataError("label for unknown image '" + name + "'");
    if (!value.is_number_integer() || value.get<long long>() < 0 ||
        static_cast<std::size_t>(value.get<long long>()) >= class_names.size()) {
      throw DataError("label for '" + name + "' is not a class index in [0, " +
                      std::to_string(class_names.size()) + ")");
    }
    labels[*idx] = value.get<std::size_t>();
    seen[*idx] = true;
  }
  for (std::size_t n = 0; n < seen.size(); ++n) {
    if (!seen[n]) throw DataError("no label for image '" + images.names()[n] + "'");
  }
  return labels;
}

namespace {

struct DemoClass {
  std::string name;
  std::vector<std::string> vocab;  // 20 short concepts
};

const std::vector<DemoClass>& demo_classes() {
  static const std::vector<DemoClass> kClasses = {
      {"beagle",
       {"droopy long ears", "tricolor coat", "white tipped tail", "compact muscular body",
        "short dense fur", "broad domed skull", "hazel pleading eyes", "square cut muzzle",
        "black saddle patch", "tan cheek markings", "straight sturdy legs", "medium sized hound",
        "white chest blaze", "alert upright stance", "sniffing ground trail", "howling open mouth",
        "pack hunting scene", "moderately short back", "rounded paw pads", "gentle brown gaze"}},
      {"basset hound",
       {"extremely short legs", "very long velvety ears", "loose wrinkled skin",
        "deep sagging dewlap", "heavy bone structure", "elongated low body", "red rimmed droopy eyes",
        "massive wide paws", "mournful solemn expression", "curved sabre tail", "slow waddling gait",
        "long heavy muzzle", "thick folded forehead", "barrel shaped chest", "crooked front knees",
        "lemon and white patches", "nose pressed downward", "ears dragging floor",
        "sleepy lounging posture", "elastic neck folds"}},
      {"golden retriever",
       {"feathered golden coat", "wavy water repellent fur", "friendly smiling face",
        "fetching tennis ball", "swimming in lake", "broad friendly head", "plumed wagging tail",
        "cream to gold shades", "dark intelligent eyes", "athletic retrieving build",
        "soft mouth carrying bird", "thick ruff around neck", "feathering on legs",
        "large sporting breed", "glossy shiny sheen", "playful bounding motion",
        "guide assistance harness", "level topline back", "warm amber color", "family backyard lawn"}},
      {"siamese cat",
       {"vivid blue almond eyes", "dark seal point face", "slender tubular body",
        "wedge shaped head", "cream colored torso", "dark brown ears", "long thin whip tail",
        "short glossy coat", "large triangular ears", "chocolate colored paws", "vocal meowing pose",
        "lean elegant legs", "fine close lying fur", "colorpoint mask pattern", "oval small feet",
        "crossed eye gaze", "angular facial profile", "pale fawn body", "lilac point variant",
        "graceful poised sitting"}},
      {"persian cat",
       {"flat pushed in face", "long flowing fur", "round copper eyes", "short snub nose",
        "thick fluffy mane", "cobby stocky body", "small rounded ears", "tear stained cheeks",
        "plush bushy tail", "white silky coat", "broad round skull", "short thick legs",
        "calm lounging on cushion", "dense woolly undercoat", "chinchilla silver tipping",
        "deep chest shape", "tufted toe fur", "groomed show coat", "sweet placid face",
        "large wide eyes"}},
  };
  return kClasses;
}

std::string format_reply(const std::vector<std::string>& concepts, std::size_t bare_index) {
  std::string s = "Here are the concepts.\n<concepts begin>\n";
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (i != bare_index) s += std::string(kConceptPrefix);
    s += concepts[i] + "\n";
  }
  s += "</concepts end>\n";
  return s;
}

}  // namespace

void write_demo_fixture(const std::filesystem::path& dir) {
  constexpr std::size_t kDim = 64;
  constexpr std::size_t kTopH = 2;
  constexpr std::size_t kImagesPerClass = 8;
  constexpr std::uint64_t kSeed = 7;
  const std::string model = "gpt-4.1";
  std::filesystem::create_directories(dir);
  const HashEmbeddingProvider embed(kDim);
  const auto& classes = demo_classes();

  std::vector<std::string> names;
  for (const auto& c : classes) names.push_back(c.name);
  const auto class_emb = embed_all(embed, names, Role::kClass);
  save_container(class_emb, dir / "classes.manifest.json");
  const auto hoods = build_neighborhoods(class_emb, kTopH);

  nlohmann::ordered_json fixture = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto prompt = render_contrastive_prompt(classes[i].name, hoods.neighbor_names(i));
    const auto digest = request_digest({model, prompt.system, prompt.user, std::nullopt});
    const auto& vocab = classes[i].vocab;
    // The persian-cat sequence opens with an off-format reply to exercise the
    // parse-failure path; the others overlap between calls to exercise dedup.
    if (classes[i].name == "persian cat") {
      fixture.push_back({{"digest", digest}, {"response", "Sorry, I cannot follow that format."}});
    }
    for (std::size_t call = 0; call < 3; ++call) {
      std::vector<std::string> batch;
      for (std::size_t t = 0; t < 10; ++t) batch.push_back(vocab[(call * 7 + t) % vocab.size()]);
      fixture.push_back({{"digest", digest}, {"response", format_reply(batch, call == 1 ? 4 : batch.size())}});
    }
  }
  write_json(dir / "llm_fixture.json", fixture);

  std::vector<std::string> img_names;
  std::vector<float> img_rows;
  nlohmann::ordered_json labels = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto anchor = embed.embed("a photo of a " + classes[i].name);
    for (std::size_t n = 0; n < kImagesPerClass; ++n) {
      Rng rng = make_stream(kSeed, {i, n});
      std::vector<double> v(anchor.begin(), anchor.end());
      std::uniform_int_distribution<std::size_t> pick(0, classes[i].vocab.size() - 1);
      for (int a = 0; a < 3; ++a) {
        const auto atom = embed.embed(classes[i].vocab[pick(rng)]);
        for (std::size_t d = 0; d < kDim; ++d) v[d] += 0.7 * atom[d];
      }
      // A distractor attribute from a hard-negative class.
      const auto& other = classes[hoods.neighbors[i][0]];
      const auto distractor = embed.embed(other.vocab[pick(rng) % other.vocab.size()]);
      std::normal_distribution<double> noise(0.0, 0.9 / std::sqrt(static_cast<double>(kDim)));
      double sq = 0.0;
      for (std::size_t d = 0; d < kDim; ++d) {
        v[d] += 0.6 * distractor[d] + noise(rng);
        sq += v[d] * v[d];
      }
      const std::string img = "img_" + padded(i * kImagesPerClass + n, 3);
      img_names.push_back(img);
      for (double x : v) img_rows.push_back(static_cast<float>(x / std::sqrt(sq)));
      labels[img] = i;
    }
  }
  save_container(EmbeddingContainer(Role::kImage, kDim, img_names, std::move(img_rows), true),
                 dir / "images.manifest.json");
  write_json(dir / "labels.json", labels);

  nlohmann::ordered_json run;
  run["seed"] = kSeed;
  run["classes"] = "classes.manifest.json";
  run["images"] = "images.manifest.json";
  run["labels"] = "labels.json";
  run["embedder"] = "hash:" + std::to_string(kDim);
  run["replay"] = "llm_fixture.json";
  run["llm_model"] = model;
  run["top_h"] = kTopH;
  run["atoms"] = 20;
  run["per_call"] = 10;
  run["max_calls"] = 6;
  run["atoms_per_prompt"] = 3;
  run["num_combos"] = 100;
  run["select_size"] = 16;
  run["aggregator"] = "soft_trim";
  run["prob_mode"] = "affine";
  write_json(dir / "run.json", run);
}

}  // namespace cgbc
