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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cgbc/embedding_store.hpp"
#include "cgbc/soft_trim.hpp"
#include "json.hpp"

namespace cgbc {

// Concept prompts for every class; prompt counts may differ between classes.
struct ClassPromptSet {
  std::vector<std::string> class_names;
  std::vector<EmbeddingContainer> prompts;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::size_t dim() const;
  void validate() const;
};

// How per-prompt similarities become class probabilities. kAffine maps every
// similarity through (s + 1) / 2 before aggregation; kSoftmaxOverClasses
// aggregates raw similarities per class and then applies a softmax with
// temperature 1 / logit_scale across classes.
enum class ProbMode { kAffine, kSoftmaxOverClasses };

std::string_view to_string(ProbMode mode);
ProbMode prob_mode_from_string(std::string_view s);

struct ScoringOptions {
  AggregatorConfig aggregator;
  ProbMode prob_mode = ProbMode::kAffine;
  double logit_scale = kClipLogitScale;
};

struct ClassificationRecord {
  std::string image_name;
  std::vector<double> class_scores;
  std::size_t predicted = 0;
  std::vector<double> per_class_rho;  // raw outlier fraction per class
  std::vector<double> per_class_median;
};

struct EvaluationReport {
  double top1_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // 0 for classes without images
  std::vector<std::size_t> per_class_count;
  double mean_rho = 0.0;
  std::size_t n_images = 0;
  std::size_t n_correct = 0;
};

struct EvaluationResult {
  std::vector<ClassificationRecord> records;  // input image order
  EvaluationReport report;
};

// First index of the maximum.
std::size_t argmax_lowest(std::span<const double> values);

// Scores one image from precomputed per-class similarity sets.
ClassificationRecord score_similarities(std::string image_name,
                                        const std::vector<std::vector<double>>& sims,
                                        const ScoringOptions& opt);

ClassificationRecord score_image(std::string image_name, std::span<const float> image,
                                 const ClassPromptSet& prompts, const ScoringOptions& opt);

// Scores every image (in parallel, results kept in input order) and
// summarizes top-1 accuracy. `workers` = 0 uses all hardware threads.
EvaluationResult evaluate(const EmbeddingContainer& images, std::span<const std::size_t> labels,
                          const ClassPromptSet& prompts, const ScoringOptions& opt,
                          unsigned workers = 0);

nlohmann::ordered_json to_json(const ClassificationRecord& rec,
                               const std::vector<std::string>& class_names);
nlohmann::ordered_json to_json(const EvaluationReport& report,
                               const std::vector<std::string>& class_names);

}  // namespace cgbc
