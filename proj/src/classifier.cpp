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


#include "cgbc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cgbc/error.hpp"
#include "cgbc/parallel.hpp"

namespace cgbc {

std::size_t ClassPromptSet::dim() const {
  if (prompts.empty()) throw DataError("empty prompt set");
  return prompts.front().dim();
}

void ClassPromptSet::validate() const {
  if (class_names.empty()) throw DataError("prompt set has no classes");
  if (class_names.size() != prompts.size()) {
    throw DataError("prompt set lists " + std::to_string(class_names.size()) + " classes but " +
                    std::to_string(prompts.size()) + " prompt containers");
  }
  const std::size_t d = prompts.front().dim();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].count() == 0) throw DataError("class '" + class_names[i] + "' has no prompts");
    if (prompts[i].dim() != d) throw DataError("prompt containers disagree on dimension");
    if (!prompts[i].normalized()) {
      throw DataError("prompts for class '" + class_names[i] + "' are not normalized");
    }
  }
}

std::string_view to_string(ProbMode mode) {
  return mode == ProbMode::kAffine ? "affine" : "softmax_over_classes";
}

ProbMode prob_mode_from_string(std::string_view s) {
  if (s == "affine") return ProbMode::kAffine;
  if (s == "softmax_over_classes" || s == "softmax") return ProbMode::kSoftmaxOverClasses;
  throw std::invalid_argument("unknown prob mode '" + std::string(s) + "'");
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ClassificationRecord score_similarities(std::string image_name,
                                        const std::vector<std::vector<double>>& sims,
                                        const ScoringOptions& opt) {
  ClassificationRecord rec;
  rec.image_name = std::move(image_name);
  const std::size_t k = sims.size();
  if (k == 0) throw std::invalid_argument("no classes to score");
  rec.class_scores.resize(k);
  rec.per_class_rho.resize(k);
  rec.per_class_median.resize(k);
  std::vector<double> mapped;
  for (std::size_t i = 0; i < k; ++i) {
    if (opt.prob_mode == ProbMode::kAffine) {
      mapped.resize(sims[i].size());
      std::transform(sims[i].begin(), sims[i].end(), mapped.begin(), sim_to_prob);
    } else {
      mapped = sims[i];
    }
    const auto est = aggregate(mapped, opt.aggregator);
    rec.class_scores[i] = est.mu_hat;
    rec.per_class_rho[i] = est.rho_raw;
    rec.per_class_median[i] = est.median;
  }
  rec.predicted = argmax_lowest(rec.class_scores);
  if (opt.prob_mode == ProbMode::kSoftmaxOverClasses) {
    const double top = rec.class_scores[rec.predicted];
    double z = 0.0;
    for (double& s : rec.class_scores) {
      s = std::exp(opt.logit_scale * (s - top));
      z += s;
    }
    for (double& s : rec.class_scores) s /= z;
  }
  return rec;
}

ClassificationRecord score_image(std::string image_name, std::span<const float> image,
                                 const ClassPromptSet& prompts, const ScoringOptions& opt) {
  if (image.size() != prompts.dim()) {
    throw DataError("image dimension " + std::to_string(image.size()) +
                    " does not match prompt dimension " + std::to_string(prompts.dim()));
  }
  std::vector<std::vector<double>> sims(prompts.num_classes());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const auto& p = prompts.prompts[i];
    sims[i].resize(p.count());
    for (std::size_t j = 0; j < p.count(); ++j) sims[i][j] = dot(image, p.row(j));
  }
  return score_similarities(std::move(image_name), sims, opt);
}

EvaluationResult evaluate(const EmbeddingContainer& images, std::span<const std::size_t> labels,
                          const ClassPromptSet& prompts, const ScoringOptions& opt,
                          unsigned workers) {
  prompts.validate();
  opt.aggregator.validate();
  const std::size_t k = prompts.num_classes();
  if (labels.size() != images.count()) {
    throw DataError(std::to_string(labels.size()) + " labels for " +
                    std::to_string(images.count()) + " images");
  }
  for (std::size_t y : labels) {
    if (y >= k) throw DataError("label " + std::to_string(y) + " out of range for " +
                                std::to_string(k) + " classes");
  }
  if (!images.normalized()) throw DataError("image embeddings must be normalized");
  if (images.dim() != prompts.dim()) throw DataError("image/prompt dimension mismatch");

  EvaluationResult out;
  out.records.resize(images.count());
  parallel_for(images.count(), [&](std::size_t n) {
    out.records[n] = score_image(images.names()[n], images.row(n), prompts, opt);
  }, workers);

  auto& rep = out.report;
  rep.n_images = images.count();
  rep.per_class_accuracy.assign(k, 0.0);
  rep.per_class_count.assign(k, 0);
  std::vector<std::size_t> per_class_correct(k, 0);
  double rho_sum = 0.0;
  for (std::size_t n = 0; n < out.records.size(); ++n) {
    const auto& r = out.records[n];
    ++rep.per_class_count[labels[n]];
    if (r.predicted == labels[n]) {
      ++rep.n_correct;
      ++per_class_correct[labels[n]];
    }
    for (double rho : r.per_class_rho) rho_sum += rho;
  }
  if (rep.n_images > 0) {
    rep.top1_accuracy = static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_images);
    rep.mean_rho = rho_sum / static_cast<double>(rep.n_images * k);
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (rep.per_class_count[i] > 0) {
      rep.per_class_accuracy[i] = static_cast<double>(per_class_correct[i]) /
                                  static_cast<double>(rep.per_class_count[i]);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const ClassificationRecord& rec,
                               const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["image"] = rec.image_name;
  j["predicted"] = rec.predicted;
  j["predicted_class"] = class_names.at(rec.predicted);
  j["class_scores"] = rec.class_scores;
  j["per_class_rho"] = rec.per_class_rho;
  j["per_class_median"] = rec.per_class_median;
  return j;
}

nlohmann::ordered_json to_json(const EvaluationReport& report,
                               const std::vector<std::string>& class_names) {
  nlohmann::ordered_json j;
  j["n_images"] = report.n_images;
  j["n_correct"] = report.n_correct;
  j["top1_accuracy"] = report.top1_accuracy;
  j["mean_rho"] = report.mean_rho;
  auto per = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    nlohmann::ordered_json e;
    e["class"] = class_names[i];
    e["count"] = report.per_class_count.at(i);
    e["accuracy"] = report.per_class_accuracy.at(i);
    per.push_back(std::move(e));
  }
  j["per_class"] = std::move(per);
  return j;
}

}  // namespace cgbc
