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


#include "cgbc/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cgbc/classifier.hpp"
#include "cgbc/concept_synth.hpp"
#include "cgbc/diagnostics.hpp"
#include "cgbc/dpp.hpp"
#include "cgbc/embedding_provider.hpp"
#include "cgbc/embedding_store.hpp"
#include "cgbc/error.hpp"
#include "cgbc/fixtures.hpp"
#include "cgbc/llm_client.hpp"
#include "cgbc/neighborhoods.hpp"
#include "cgbc/rng.hpp"
#include "cgbc/simulator.hpp"
#include "cgbc/soft_trim.hpp"
#include "json.hpp"

namespace cgbc {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Stream tags for derive_seed; each stage draws from its own family.
constexpr std::uint64_t kStreamGen = 1;
constexpr std::uint64_t kStreamCompose = 2;

// Thrown for invalid invocations (bad flag values, config schema problems).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::uint64_t seed = 0;
  std::size_t top_h = kDefaultNeighborhoodSize;
  std::size_t atoms = kDefaultAtomCapacity;
  std::size_t per_call = kDefaultConceptsPerCall;
  std::size_t max_calls = 10;
  std::size_t atoms_per_prompt = 3;
  std::size_t num_combos = 500;
  std::size_t select_size = 16;
  double lambda = 2.5;
  double slope = kClipLogitScale;
  std::string aggregator = "soft_trim";
  std::string prob_mode = "affine";
  std::string dpp = "on";
  std::string style = "contrastive";
  std::string embedder = "hash:64";
  std::string llm_endpoint = "https://api.openai.com/v1/chat/completions";
  std::string llm_model = "gpt-4.1";
  std::optional<fs::path> replay;
  std::optional<fs::path> record;
  fs::path out = "cgbc_out";
  std::optional<fs::path> classes, images, labels, prompt_set, neighbors, concepts, composites;
  unsigned workers = 0;
};

// Raw flag values; unset optionals leave the config value in place.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> top_h, atoms, per_call, max_calls, atoms_per_prompt, num_combos,
      select_size;
  std::optional<double> lambda, slope;
  std::optional<std::string> aggregator, prob_mode, dpp, style, embedder, llm_endpoint, llm_model;
  std::optional<std::string> replay, record, out;
  std::optional<std::string> classes, images, labels, prompt_set, neighbors, concepts, composites;
  std::optional<unsigned> workers;
};

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

void take_path(const nlohmann::json& j, const char* key, const fs::path& base,
               std::optional<fs::path>& dst) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw UsageError(std::string("config key '") + key + "' must be a string");
  dst = base / j.at(key).get<std::string>();
}

std::string resolve_embedder(std::string spec, const fs::path& base) {
  constexpr std::string_view kPrefix = "container:";
  if (spec.rfind(kPrefix, 0) == 0) {
    fs::path p = spec.substr(kPrefix.size());
    if (p.is_relative()) spec = std::string(kPrefix) + (base / p).string();
  }
  return spec;
}

Settings load_settings(const Flags& f) {
  Settings s;
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw UsageError("cannot open config " + *f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config " + *f.config + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    static const std::vector<std::string> kKnown = {
        "seed", "top_h", "atoms", "per_call", "max_calls", "atoms_per_prompt", "num_combos",
        "select_size", "lambda", "slope", "aggregator", "prob_mode", "dpp", "style", "embedder",
        "llm_endpoint", "llm_model", "replay", "record", "out", "classes", "images", "labels",
        "prompt_set", "neighbors", "concepts", "composites", "workers"};
    for (const auto& [key, _] : j.items()) {
      if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
        throw UsageError("unknown config key '" + key + "'");
      }
    }
    const fs::path base = fs::path(*f.config).parent_path();
    take(j, "seed", s.seed);
    take(j, "top_h", s.top_h);
    take(j, "atoms", s.atoms);
    take(j, "per_call", s.per_call);
    take(j, "max_calls", s.max_calls);
    take(j, "atoms_per_prompt", s.atoms_per_prompt);
    take(j, "num_combos", s.num_combos);
    take(j, "select_size", s.select_size);
    take(j, "lambda", s.lambda);
    take(j, "slope", s.slope);
    take(j, "aggregator", s.aggregator);
    take(j, "prob_mode", s.prob_mode);
    take(j, "dpp", s.dpp);
    take(j, "style", s.style);
    take(j, "embedder", s.embedder);
    s.embedder = resolve_embedder(s.embedder, base);
    take(j, "llm_endpoint", s.llm_endpoint);
    take(j, "llm_model", s.llm_model);
    take(j, "workers", s.workers);
    take_path(j, "replay", base, s.replay);
    take_path(j, "record", base, s.record);
    std::optional<fs::path> out;
    take_path(j, "out", base, out);
    if (out) s.out = *out;
    take_path(j, "classes", base, s.classes);
    take_path(j, "images", base, s.images);
    take_path(j, "labels", base, s.labels);
    take_path(j, "prompt_set", base, s.prompt_set);
    take_path(j, "neighbors", base, s.neighbors);
    take_path(j, "concepts", base, s.concepts);
    take_path(j, "composites", base, s.composites);
  }
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(s.seed, f.seed);
  set(s.top_h, f.top_h);
  set(s.atoms, f.atoms);
  set(s.per_call, f.per_call);
  set(s.max_calls, f.max_calls);
  set(s.atoms_per_prompt, f.atoms_per_prompt);
  set(s.num_combos, f.num_combos);
  set(s.select_size, f.select_size);
  set(s.lambda, f.lambda);
  set(s.slope, f.slope);
  set(s.aggregator, f.aggregator);
  set(s.prob_mode, f.prob_mode);
  set(s.dpp, f.dpp);
  set(s.style, f.style);
  set(s.embedder, f.embedder);
  set(s.llm_endpoint, f.llm_endpoint);
  set(s.llm_model, f.llm_model);
  set(s.workers, f.workers);
  if (f.replay) s.replay = *f.replay;
  if (f.record) s.record = *f.record;
  if (f.out) s.out = *f.out;
  if (f.classes) s.classes = *f.classes;
  if (f.images) s.images = *f.images;
  if (f.labels) s.labels = *f.labels;
  if (f.prompt_set) s.prompt_set = *f.prompt_set;
  if (f.neighbors) s.neighbors = *f.neighbors;
  if (f.concepts) s.concepts = *f.concepts;
  if (f.composites) s.composites = *f.composites;

  if (s.top_h == 0 || s.atoms == 0 || s.per_call == 0 || s.max_calls == 0 ||
      s.atoms_per_prompt == 0 || s.num_combos == 0 || s.select_size == 0) {
    throw UsageError("all counts must be positive");
  }
  if (s.select_size > s.num_combos) throw UsageError("select_size must not exceed num_combos");
  if (s.dpp != "on" && s.dpp != "off") throw UsageError("--dpp must be 'on' or 'off'");
  if (s.style != "contrastive" && s.style != "descriptive") {
    throw UsageError("--style must be 'contrastive' or 'descriptive'");
  }
  if (s.replay && s.record) throw UsageError("--replay and --record are mutually exclusive");
  return s;
}

fs::path require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw UsageError(std::string("missing required input: --") + what);
  return *p;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

ScoringOptions scoring_options(const Settings& s) {
  ScoringOptions opt;
  opt.aggregator.mode = aggregator_mode_from_string(s.aggregator);
  opt.aggregator.lambda = s.lambda;
  opt.aggregator.slope = s.slope;
  opt.aggregator.validate();
  opt.prob_mode = prob_mode_from_string(s.prob_mode);
  return opt;
}

std::unique_ptr<LlmClient> llm_client(const Settings& s) {
  LlmClientConfig cfg;
  cfg.endpoint = s.llm_endpoint;
  cfg.model = s.llm_model;
  cfg.per_call = s.per_call;
  if (const char* key = std::getenv("CGBC_LLM_KEY")) cfg.api_key = key;
  if (s.replay) {
    cfg.mode = LlmMode::kReplay;
    cfg.fixture_path = *s.replay;
  } else if (s.record) {
    cfg.mode = LlmMode::kRecord;
    cfg.fixture_path = *s.record;
  } else {
    cfg.mode = LlmMode::kLive;
  }
  return make_llm_client(cfg);
}

// --- subcommands -----------------------------------------------------------

int cmd_neighbors(const Settings& s, std::ostream& out) {
  const auto classes = load_container(require(s.classes, "classes"));
  const auto table = build_neighborhoods(classes, s.top_h);
  const auto path = s.out / "neighbors.json";
  write_json_file(path, to_json(table));
  out << "neighbors: " << classes.count() << " classes, H=" << s.top_h << " -> " << path.string()
      << '\n';
  return 0;
}

int cmd_gen(const Settings& s, std::ostream& out) {
  const auto table = neighborhoods_from_json(read_json_file(s.neighbors.value_or(s.out / "neighbors.json")));
  const auto embed = make_embedding_provider(s.embedder);
  auto llm = llm_client(s);
  ojson pools = ojson::array();
  ojson log = ojson::array();
  std::size_t total_atoms = 0, total_calls = 0;
  for (std::size_t i = 0; i < table.class_names.size(); ++i) {
    GenerationOptions opt;
    opt.model = s.llm_model;
    opt.capacity = s.atoms;
    opt.max_calls = s.max_calls;
    opt.per_call = s.per_call;
    opt.style = s.style == "descriptive" ? PromptStyle::kDescriptive : PromptStyle::kContrastive;
    opt.seed = derive_seed(s.seed, {kStreamGen, i});
    const auto res = generate_atoms(table.class_names[i], table.neighbor_names(i), *llm, *embed, opt);
    pools.push_back(to_json(res.pool));
    log.push_back({{"class", table.class_names[i]},
                   {"calls", res.calls},
                   {"parse_failures", res.parse_failures},
                   {"atoms", res.pool.atoms.size()},
                   {"warnings", res.warnings}});
    total_atoms += res.pool.atoms.size();
    total_calls += res.calls;
  }
  write_json_file(s.out / "concepts.json", pools);
  write_json_file(s.out / "gen_log.json", log);
  out << "gen: " << table.class_names.size() << " classes, " << total_atoms << " atoms from "
      << total_calls << " calls -> " << (s.out / "concepts.json").string() << '\n';
  return 0;
}

std::vector<ConceptPool> read_pools(const fs::path& path) {
  const auto j = read_json_file(path);
  if (!j.is_array()) throw DataError(path.string() + ": expected an array of concept pools");
  std::vector<ConceptPool> pools;
  for (const auto& e : j) pools.push_back(pool_from_json(e));
  return pools;
}

int cmd_compose(const Settings& s, std::ostream& out) {
  const auto pools = read_pools(s.concepts.value_or(s.out / "concepts.json"));
  ojson all = ojson::array();
  std::size_t total = 0;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const auto res = compose(pools[i], s.atoms_per_prompt, s.num_combos,
                             derive_seed(s.seed, {kStreamCompose, i}));
    auto j = to_json(pools[i].class_name, res.composites);
    j["warnings"] = res.warnings;
    all.push_back(std::move(j));
    total += res.composites.size();
  }
  write_json_file(s.out / "composites.json", all);
  out << "compose: " << pools.size() << " classes, " << total << " composites -> "
      << (s.out / "composites.json").string() << '\n';
  return 0;
}

int cmd_select(const Settings& s, std::ostream& out) {
  const auto j = read_json_file(s.composites.value_or(s.out / "composites.json"));
  if (!j.is_array()) throw DataError("composites file must be an array");
  const auto embed = make_embedding_provider(s.embedder);
  const bool use_dpp = s.dpp == "on";
  ojson report = ojson::array();
  ojson set = ojson::array();
  std::size_t total = 0;
  for (const auto& entry : j) {
    const auto comps = composites_from_json(entry);
    const std::string cls = entry.at("class").get<std::string>();
    ojson sel = ojson::object();
    sel["class"] = cls;
    sel["requested"] = s.select_size;
    sel["dpp"] = s.dpp;
    std::vector<std::string> warnings;
    std::vector<std::size_t> chosen;
    std::vector<double> gains;
    const std::size_t m = std::min(s.select_size, comps.size());
    if (m < s.select_size) {
      warnings.push_back("only " + std::to_string(comps.size()) + " composites available for '" +
                         cls + "'");
    }
    if (m > 0 && use_dpp) {
      std::vector<std::string> texts;
      for (const auto& c : comps) texts.push_back(c.text);
      const auto kernel = build_kernel(embed_all(*embed, texts, Role::kConcept));
      auto res = greedy_map(kernel, m);
      chosen = std::move(res.indices);
      gains = std::move(res.marginal_gains);
      warnings.insert(warnings.end(), res.warnings.begin(), res.warnings.end());
    } else {
      for (std::size_t t = 0; t < m; ++t) chosen.push_back(t);
    }
    ojson items = ojson::array();
    std::vector<std::string> prompts;
    for (std::size_t t = 0; t < chosen.size(); ++t) {
      const auto& c = comps[chosen[t]];
      ojson it = ojson::object();
      it["index"] = chosen[t];
      it["concept_text"] = c.text;
      it["prompt"] = render_prompt(cls, c.text);
      if (use_dpp) it["marginal_gain"] = gains[t];
      items.push_back(std::move(it));
      prompts.push_back(render_prompt(cls, c.text));
    }
    sel["selected"] = std::move(items);
    sel["warnings"] = warnings;
    report.push_back(std::move(sel));
    total += chosen.size();

    if (prompts.empty()) throw DataError("no prompts selected for class '" + cls + "'");
    const std::string rel = "prompts/" + cls + ".manifest.json";
    save_container(embed_all(*embed, prompts, Role::kPrompt), s.out / rel);
    set.push_back({{"class", cls}, {"container", rel}});
  }
  write_json_file(s.out / "selection.json", report);
  write_json_file(s.out / "prompt_set.json", set);
  out << "select: " << report.size() << " classes, " << total << " prompts (dpp " << s.dpp
      << ") -> " << (s.out / "selection.json").string() << '\n';
  return 0;
}

std::string records_jsonl(const EvaluationResult& res, const std::vector<std::string>& names) {
  std::string text;
  for (const auto& r : res.records) text += to_json(r, names).dump() + "\n";
  return text;
}

int cmd_classify(const Settings& s, std::ostream& out) {
  const auto opt = scoring_options(s);
  const auto prompts = load_prompt_set(s.prompt_set.value_or(s.out / "prompt_set.json"));
  const auto images = load_container(require(s.images, "images"));
  // Labels are irrelevant here; zeros keep evaluate() usable as the batch scorer.
  const std::vector<std::size_t> dummy(images.count(), 0);
  const auto res = evaluate(images, dummy, prompts, opt, s.workers);
  write_text(s.out / "results.jsonl", records_jsonl(res, prompts.class_names));
  out << "classify: " << images.count() << " images, " << prompts.num_classes()
      << " classes, aggregator " << s.aggregator << " -> " << (s.out / "results.jsonl").string()
      << '\n';
  return 0;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
  const auto opt = scoring_options(s);
  const auto prompts = load_prompt_set(s.prompt_set.value_or(s.out / "prompt_set.json"));
  const auto images = load_container(require(s.images, "images"));
  const auto labels = load_labels(require(s.labels, "labels"), images, prompts.class_names);
  const auto res = evaluate(images, labels, prompts, opt, s.workers);
  write_text(s.out / "results.jsonl", records_jsonl(res, prompts.class_names));
  auto report = to_json(res.report, prompts.class_names);
  report["aggregator"] = s.aggregator;
  report["prob_mode"] = s.prob_mode;
  report["lambda"] = s.lambda;
  report["slope"] = s.slope;
  write_json_file(s.out / "report.json", report);
  std::ostringstream acc;
  acc.setf(std::ios::fixed);
  acc.precision(4);
  acc << res.report.top1_accuracy;
  out << "evaluate: top-1 " << acc.str() << " (" << res.report.n_correct << "/"
      << res.report.n_images << "), aggregator " << s.aggregator << " -> "
      << (s.out / "report.json").string() << '\n';
  return 0;
}

int cmd_simulate(const Settings& s, const std::string& preset, std::optional<std::size_t> trials,
                 std::ostream& out) {
  AggregatorConfig agg;
  agg.mode = AggregatorMode::kSoftTrim;
  agg.lambda = s.lambda;
  agg.slope = s.slope;
  agg.validate();
  if (preset == "theorem1") {
    sim::SweepConfig cfg;
    cfg.seed = s.seed;
    cfg.lambda = s.lambda;
    cfg.slopes = {s.slope};
    cfg.workers = s.workers;
    if (trials) cfg.trials = *trials;
    const auto res = sim::run_theorem1_sweep(cfg);
    std::ostringstream csv;
    sim::write_sweep_csv(res, csv);
    write_text(s.out / "sweep.csv", csv.str());
    write_json_file(s.out / "sweep_summary.json", sim::sweep_summary(res));
    out << "simulate theorem1: " << res.cells.size() << " cells x " << cfg.trials
        << " trials, log-log slope at rho=0 " << res.loglog_slope_rho0.front() << " -> "
        << (s.out / "sweep.csv").string() << '\n';
    return 0;
  }
  if (preset == "goodness") {
    sim::GoodnessConfig cfg;
    cfg.seed = s.seed;
    cfg.workers = s.workers;
    if (trials) cfg.trials = *trials;
    const auto rows = sim::check_goodness(cfg);
    ojson j = ojson::array();
    bool all = true;
    for (const auto& r : rows) {
      j.push_back({{"alpha", r.alpha},
                   {"max_mean_ratio", r.max_mean_ratio},
                   {"max_var_ratio", r.max_var_ratio},
                   {"holds", r.holds}});
      all = all && r.holds;
    }
    write_json_file(s.out / "goodness.json", j);
    out << "simulate goodness: " << rows.size() << " alphas, " << (all ? "all hold" : "VIOLATED")
        << " -> " << (s.out / "goodness.json").string() << '\n';
    return 0;
  }
  if (preset == "excess-risk") {
    const std::size_t n = trials.value_or(2000);
    ojson j = ojson::array();
    std::size_t held = 0, cells = 0;
    for (std::size_t k : {2, 5}) {
      for (double rho : {0.0, 0.1, 0.2}) {
        for (std::size_t m : {50, 400}) {
          sim::RiskSpec spec;
          spec.k = k;
          spec.rho = rho;
          spec.m = m;
          spec.margins = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2};
          const auto r = sim::run_excess_risk(spec, n, agg, derive_seed(s.seed, {cells}), s.workers);
          j.push_back({{"K", k},
                       {"rho", rho},
                       {"M", m},
                       {"trials", r.trials},
                       {"mismatch_rate", r.mismatch_rate},
                       {"excess_risk", r.excess_risk},
                       {"bound_rate", r.bound_rate},
                       {"standard_error", r.standard_error},
                       {"holds", r.holds}});
          held += r.holds ? 1 : 0;
          ++cells;
        }
      }
    }
    write_json_file(s.out / "excess_risk.json", j);
    out << "simulate excess-risk: " << held << "/" << cells << " cells within bound -> "
        << (s.out / "excess_risk.json").string() << '\n';
    return 0;
  }
  throw UsageError("unknown preset '" + preset + "' (theorem1, goodness, excess-risk)");
}

int cmd_diagnose(const Settings& s, std::ostream& out) {
  const auto prompts = load_prompt_set(s.prompt_set.value_or(s.out / "prompt_set.json"));
  const auto images = load_container(require(s.images, "images"));
  if (images.dim() != prompts.dim()) throw DataError("image and prompt dimensions differ");
  ojson reports = ojson::array();
  std::string qq = "image,class,theoretical,sample\n";
  std::size_t skewed = 0, heavy = 0, skipped = 0;
  for (std::size_t c = 0; c < prompts.num_classes(); ++c) {
    const auto sims = cosine_sim(images, prompts.prompts[c]);
    if (sims.cols < 4) {
      ++skipped;
      continue;
    }
    for (std::size_t n = 0; n < images.count(); ++n) {
      std::vector<double> scores(sims.cols);
      for (std::size_t j = 0; j < sims.cols; ++j) scores[j] = sims.at(n, j);
      const auto rep = describe(scores);
      auto jr = to_json(rep);
      ojson entry = ojson::object();
      entry["image"] = images.names()[n];
      entry["class"] = prompts.class_names[c];
      for (auto& [k, v] : jr.items()) {
        if (k != "qq_points") entry[k] = v;
      }
      reports.push_back(std::move(entry));
      for (const auto& [t, q] : rep.qq_points) {
        std::ostringstream line;
        line.precision(9);
        line << images.names()[n] << ',' << prompts.class_names[c] << ',' << t << ',' << q << '\n';
        qq += line.str();
      }
      skewed += rep.skewed ? 1 : 0;
      heavy += rep.heavy_tailed ? 1 : 0;
    }
  }
  write_json_file(s.out / "diagnostics.json", reports);
  write_text(s.out / "qq_points.csv", qq);
  out << "diagnose: " << reports.size() << " score sets, " << skewed << " skewed, " << heavy
      << " heavy-tailed";
  if (skipped) out << ", " << skipped << " classes skipped (<4 prompts)";
  out << " -> " << (s.out / "diagnostics.json").string() << '\n';
  return 0;
}

int cmd_make_fixtures(const Settings& s, const std::string& kind,
                      const SyntheticDatasetSpec& spec, std::ostream& out) {
  if (kind == "demo") {
    write_demo_fixture(s.out);
  } else if (kind == "synthetic") {
    write_synthetic(make_synthetic(spec), s.out);
  } else {
    throw UsageError("unknown fixture kind '" + kind + "' (demo, synthetic)");
  }
  out << "make-fixtures: " << kind << " -> " << s.out.string() << '\n';
  return 0;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config; flags override its values");
  app->add_option("--seed", f.seed, "global seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--workers", f.workers, "worker threads (0 = all cores)");
}

void add_scoring(CLI::App* app, Flags& f) {
  app->add_option("--lambda", f.lambda, "outlier threshold in MAD units");
  app->add_option("--slope", f.slope, "soft-trim sigmoid slope");
  app->add_option("--aggregator", f.aggregator,
                  "prior_mean|soft_trim|median_only|hard_trim|huber|cauchy|confidence");
  app->add_option("--prob-mode", f.prob_mode, "affine|softmax_over_classes");
  app->add_option("--images", f.images, "image embedding container manifest");
  app->add_option("--prompt-set", f.prompt_set, "prompt_set.json");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  static const auto logger = [] {
    auto l = std::make_shared<spdlog::logger>(
        "cgbc", std::make_shared<spdlog::sinks::ostream_sink_mt>(std::cerr));
    l->set_pattern("[%l] %v");
    return l;
  }();
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> prev;
    ~Restore() { spdlog::set_default_logger(prev); }
  } restore{previous};

  CLI::App app{"Concept-guided Bayesian zero-shot classification toolkit", "cgbc"};
  app.require_subcommand(1);
  Flags f;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* neighbors = app.add_subcommand("neighbors", "build hard-negative neighborhoods");
  add_common(neighbors, f);
  neighbors->add_option("--classes", f.classes, "class-name embedding container manifest");
  neighbors->add_option("--top-h", f.top_h, "neighborhood size H");

  auto* gen = app.add_subcommand("gen", "generate and deduplicate atomic concepts");
  add_common(gen, f);
  gen->add_option("--neighbors", f.neighbors, "neighbors.json (default <out>/neighbors.json)");
  gen->add_option("--atoms", f.atoms, "atom pool capacity per class");
  gen->add_option("--per-call", f.per_call, "concepts requested per LLM call");
  gen->add_option("--max-calls", f.max_calls, "LLM call budget per class");
  gen->add_option("--style", f.style, "contrastive|descriptive");
  gen->add_option("--embedder", f.embedder, "hash[:dim] or container:<manifest>");
  gen->add_option("--llm-endpoint", f.llm_endpoint, "chat-completions URL");
  gen->add_option("--llm-model", f.llm_model, "model identifier");
  gen->add_option("--replay", f.replay, "serve LLM calls from this fixture");
  gen->add_option("--record", f.record, "call the endpoint and append to this fixture");

  auto* comp = app.add_subcommand("compose", "sample composite concepts");
  add_common(comp, f);
  comp->add_option("--concepts", f.concepts, "concepts.json (default <out>/concepts.json)");
  comp->add_option("--atoms-per-prompt", f.atoms_per_prompt, "atoms per composite");
  comp->add_option("--num-combos", f.num_combos, "composites per class");
  comp->add_option("--select-size", f.select_size, "checked against --num-combos");

  auto* select = app.add_subcommand("select", "select a diverse prompt subset");
  add_common(select, f);
  select->add_option("--composites", f.composites, "composites.json (default <out>/composites.json)");
  select->add_option("--select-size", f.select_size, "prompts per class M");
  select->add_option("--num-combos", f.num_combos, "checked against --select-size");
  select->add_option("--dpp", f.dpp, "on|off (off keeps the first M in sampling order)");
  select->add_option("--embedder", f.embedder, "hash[:dim] or container:<manifest>");

  auto* classify = app.add_subcommand("classify", "score images");
  add_common(classify, f);
  add_scoring(classify, f);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score labeled images and report accuracy");
  add_common(evaluate_cmd, f);
  add_scoring(evaluate_cmd, f);
  evaluate_cmd->add_option("--labels", f.labels, "labels JSON {image_name: class_index}");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo checks of the estimator");
  add_common(simulate, f);
  std::string preset = "theorem1";
  std::optional<std::size_t> trials;
  simulate->add_option("--preset", preset, "theorem1|goodness|excess-risk");
  simulate->add_option("--trials", trials, "trials per cell");
  simulate->add_option("--lambda", f.lambda, "outlier threshold in MAD units");
  simulate->add_option("--slope", f.slope, "soft-trim sigmoid slope");

  auto* diagnose = app.add_subcommand("diagnose", "skewness / kurtosis / Q-Q of score sets");
  add_common(diagnose, f);
  diagnose->add_option("--images", f.images, "image embedding container manifest");
  diagnose->add_option("--prompt-set", f.prompt_set, "prompt_set.json");

  auto* fixtures = app.add_subcommand("make-fixtures", "write packaged test assets");
  add_common(fixtures, f);
  std::string kind = "demo";
  SyntheticDatasetSpec spec;
  fixtures->add_option("--kind", kind, "demo|synthetic");
  fixtures->add_option("--classes-k", spec.k, "synthetic: number of classes");
  fixtures->add_option("--prompts-per-class", spec.m_per_class, "synthetic: prompts per class");
  fixtures->add_option("--n-images", spec.n_images, "synthetic: images");
  fixtures->add_option("--dim", spec.dim, "synthetic: embedding dimension");
  fixtures->add_option("--margin", spec.margin, "synthetic: anchor margin");
  fixtures->add_option("--noise", spec.noise_sigma, "synthetic: image noise");
  fixtures->add_option("--prompt-noise", spec.prompt_sigma, "synthetic: prompt noise");
  fixtures->add_option("--outlier-rate", spec.outlier_rate, "synthetic: planted outlier fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  logger->set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    const Settings s = load_settings(f);
    if (neighbors->parsed()) return cmd_neighbors(s, out);
    if (gen->parsed()) return cmd_gen(s, out);
    if (comp->parsed()) return cmd_compose(s, out);
    if (select->parsed()) return cmd_select(s, out);
    if (classify->parsed()) return cmd_classify(s, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(s, out);
    if (simulate->parsed()) return cmd_simulate(s, preset, trials, out);
    if (diagnose->parsed()) return cmd_diagnose(s, out);
    if (fixtures->parsed()) {
      spec.seed = s.seed;
      return cmd_make_fixtures(s, kind, spec, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace cgbc
