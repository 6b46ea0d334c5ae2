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

#include <cmath>
#include <numeric>

#include "cgbc/classifier.hpp"
#include "cgbc/error.hpp"
#include "test_util.hpp"

namespace cgbc {
namespace {

ScoringOptions options(AggregatorMode m, ProbMode p = ProbMode::kAffine) {
  ScoringOptions o;
  o.aggregator.mode = m;
  o.prob_mode = p;
  return o;
}

const AggregatorMode kAllModes[] = {AggregatorMode::kPriorMean, AggregatorMode::kSoftTrim,
                                    AggregatorMode::kMedianOnly, AggregatorMode::kHardTrim,
                                    AggregatorMode::kHuber,      AggregatorMode::kCauchy,
                                    AggregatorMode::kConfidence};

ClassPromptSet random_prompts(std::size_t k, std::size_t m, std::size_t d, std::uint64_t seed) {
  ClassPromptSet s;
  for (std::size_t i = 0; i < k; ++i) {
    s.class_names.push_back("c" + std::to_string(i));
    s.prompts.push_back(testing::random_container(m + (seed + i) % 3, d, seed * 31 + i));
  }
  return s;
}

TEST(ScoreImage, ForcedByMonotonicity) {
  ClassPromptSet s{{"a", "b"},
                   {EmbeddingContainer(Role::kPrompt, 2, {"p"}, {1, 0}, true),
                    EmbeddingContainer(Role::kPrompt, 2, {"q"}, {0, 1}, true)}};
  const std::vector<float> img{1, 0};
  for (auto m : kAllModes) {
    EXPECT_EQ(score_image("x", img, s, options(m)).predicted, 0u);
    EXPECT_EQ(score_image("x", img, s, options(m, ProbMode::kSoftmaxOverClasses)).predicted, 0u);
  }
  const std::vector<float> img2{0, 1};
  EXPECT_EQ(score_image("y", img2, s, options(AggregatorMode::kSoftTrim)).predicted, 1u);
}

TEST(ScoreImage, TiesGoToClassZero) {
  EmbeddingContainer p(Role::kPrompt, 2, {"p", "q"}, {0.6f, 0.8f, 1, 0}, true);
  ClassPromptSet s{{"a", "b", "c"}, {p, p, p}};
  const std::vector<float> img{0, 1};
  for (auto m : kAllModes) EXPECT_EQ(score_image("x", img, s, options(m)).predicted, 0u);
}

TEST(ScoreImage, PriorMeanMatchesBruteForce) {
  const auto s = random_prompts(3, 5, 8, 1);
  const auto img = testing::random_container(1, 8, 2, Role::kImage);
  const auto r = score_image("x", img.row(0), s, options(AggregatorMode::kPriorMean));
  for (std::size_t i = 0; i < 3; ++i) {
    double acc = 0.0;
    const auto& p = s.prompts[i];
    for (std::size_t j = 0; j < p.count(); ++j) {
      double dotp = 0.0;
      for (std::size_t d = 0; d < 8; ++d) dotp += double(img.row(0)[d]) * p.row(j)[d];
      acc += (dotp + 1.0) / 2.0;
    }
    EXPECT_NEAR(r.class_scores[i], acc / p.count(), 1e-6);
  }
}

TEST(ScoreImage, SoftmaxModeNormalizesAcrossClasses) {
  const auto s = random_prompts(4, 6, 8, 3);
  const auto img = testing::random_container(1, 8, 4, Role::kImage);
  auto o = options(AggregatorMode::kPriorMean, ProbMode::kSoftmaxOverClasses);
  const auto r = score_image("x", img.row(0), s, o);
  EXPECT_NEAR(std::accumulate(r.class_scores.begin(), r.class_scores.end(), 0.0), 1.0, 1e-12);
  // Oracle: softmax(logit_scale * raw mean similarity).
  std::vector<double> raw;
  for (const auto& p : s.prompts) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p.count(); ++j) acc += dot(img.row(0), p.row(j));
    raw.push_back(acc / p.count());
  }
  double z = 0.0;
  for (double x : raw) z += std::exp(o.logit_scale * x);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.class_scores[i], std::exp(o.logit_scale * raw[i]) / z, 1e-9);
  EXPECT_EQ(r.predicted, argmax_lowest(raw));
  EXPECT_EQ(prob_mode_from_string("softmax"), ProbMode::kSoftmaxOverClasses);
  EXPECT_EQ(prob_mode_from_string("softmax_over_classes"), ProbMode::kSoftmaxOverClasses);
  EXPECT_THROW(prob_mode_from_string("sigmoid"), std::invalid_argument);
}

TEST(ScoreImage, DimensionMismatch) {
  const auto s = random_prompts(2, 3, 8, 5);
  const std::vector<float> img(7, 0.0f);
  EXPECT_THROW(score_image("x", img, s, options(AggregatorMode::kSoftTrim)), DataError);
}

TEST(ScoreSimilarities, ArgmaxInvariantUnderAffineMaps) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1), ua(0.05, 1.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::vector<double>> sims(2 + t % 6);
    for (auto& c : sims) {
      c.resize(1 + (t * 7 + c.size()) % 17);
      for (auto& x : c) x = u(rng);
    }
    const double a = ua(rng);
    const double b = (1.0 - a) * u(rng);  // keeps mapped sims inside [-1, 1]
    auto moved = sims;
    for (auto& c : moved)
      for (auto& x : c) x = a * x + b;
    for (auto m : kAllModes) {
      EXPECT_EQ(score_similarities("x", sims, options(m)).predicted,
                score_similarities("x", moved, options(m)).predicted)
          << to_string(m) << " trial " << t;
    }
  }
}

TEST(ScoreSimilarities, SinglePromptCollapsesModes) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<double>> sims(5, std::vector<double>(1));
    for (auto& c : sims) c[0] = u(rng);
    std::vector<double> single;
    for (auto& c : sims) single.push_back(c[0]);
    for (auto m : kAllModes) {
      const auto r = score_similarities("x", sims, options(m));
      EXPECT_EQ(r.predicted, argmax_lowest(single));
      for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(r.class_scores[i], sim_to_prob(single[i]));
    }
  }
}

TEST(Evaluate, ForcedAccuracies) {
  // One prompt per class: each image is its class's prompt, so it scores 1.
  const auto protos = testing::random_container(4, 16, 10);
  ClassPromptSet s;
  std::vector<std::string> names;
  std::vector<float> rows;
  std::vector<std::size_t> labels, wrong;
  for (std::size_t i = 0; i < 4; ++i) {
    s.class_names.push_back("c" + std::to_string(i));
    std::vector<float> r(protos.row(i).begin(), protos.row(i).end());
    s.prompts.emplace_back(Role::kPrompt, 16, std::vector<std::string>{"p"}, r, true);
    names.push_back("img" + std::to_string(i));
    rows.insert(rows.end(), r.begin(), r.end());
    labels.push_back(i);
    wrong.push_back((i + 1) % 4);
  }
  EmbeddingContainer images(Role::kImage, 16, names, rows, true);
  for (auto m : kAllModes) {
    const auto good = evaluate(images, labels, s, options(m));
    EXPECT_DOUBLE_EQ(good.report.top1_accuracy, 1.0) << to_string(m);
    EXPECT_EQ(good.report.n_correct, 4u);
    EXPECT_EQ(good.report.per_class_accuracy, std::vector<double>(4, 1.0));
    EXPECT_DOUBLE_EQ(evaluate(images, wrong, s, options(m)).report.top1_accuracy, 0.0);
  }
  EXPECT_THROW(evaluate(images, std::vector<std::size_t>{0, 1, 2, 9}, s, options(AggregatorMode::kSoftTrim)),
               DataError);
  EXPECT_THROW(evaluate(images, std::vector<std::size_t>{0, 1}, s, options(AggregatorMode::kSoftTrim)), DataError);
}

TEST(Evaluate, MatchesIndependentOracleAndIsOrderIndependent) {
  // Four classes with known-margin Gaussian perturbations.
  const auto anchors = testing::random_container(4, 32, 20, Role::kClass);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 0.15);
  auto perturbed = [&](std::span<const float> a) {
    std::vector<double> v(a.begin(), a.end());
    double sq = 0.0;
    for (auto& x : v) {
      x += g(rng);
      sq += x * x;
    }
    std::vector<float> out;
    for (double x : v) out.push_back(static_cast<float>(x / std::sqrt(sq)));
    return out;
  };
  ClassPromptSet s;
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<float> rows;
    for (int j = 0; j < 8; ++j) {
      auto r = perturbed(anchors.row(i));
      rows.insert(rows.end(), r.begin(), r.end());
    }
    s.class_names.push_back(anchors.names()[i]);
    s.prompts.emplace_back(Role::kPrompt, 32, testing::numbered("p", 8), rows, true);
  }
  std::vector<std::string> names;
  std::vector<float> rows;
  std::vector<std::size_t> labels;
  for (std::size_t n = 0; n < 60; ++n) {
    names.push_back("i" + std::to_string(n));
    auto r = perturbed(anchors.row(n % 4));
    rows.insert(rows.end(), r.begin(), r.end());
    labels.push_back(n % 4);
  }
  EmbeddingContainer images(Role::kImage, 32, names, rows, true);
  const auto res = evaluate(images, labels, s, options(AggregatorMode::kPriorMean), 3);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < 60; ++n) {
    std::vector<double> means;
    for (const auto& p : s.prompts) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 8; ++j) {
        double d = 0.0;
        for (std::size_t k = 0; k < 32; ++k) d += double(images.row(n)[k]) * p.row(j)[k];
        acc += (d + 1) / 2;
      }
      means.push_back(acc / 8);
    }
    correct += std::max_element(means.begin(), means.end()) - means.begin() == long(labels[n]);
  }
  EXPECT_EQ(res.report.n_correct, correct);
  EXPECT_DOUBLE_EQ(res.report.top1_accuracy, correct / 60.0);

  // Reverse image order: same report, records reversed.
  std::vector<std::string> rn(names.rbegin(), names.rend());
  std::vector<float> rr;
  for (std::size_t n = 60; n-- > 0;) rr.insert(rr.end(), images.row(n).begin(), images.row(n).end());
  std::vector<std::size_t> rl(labels.rbegin(), labels.rend());
  const auto rev = evaluate(EmbeddingContainer(Role::kImage, 32, rn, rr, true), rl, s,
                            options(AggregatorMode::kSoftTrim), 1);
  const auto fwd = evaluate(images, labels, s, options(AggregatorMode::kSoftTrim), 4);
  EXPECT_EQ(to_json(rev.report, s.class_names).dump(), to_json(fwd.report, s.class_names).dump());
  for (std::size_t n = 0; n < 60; ++n) EXPECT_EQ(rev.records[59 - n].class_scores, fwd.records[n].class_scores);
}

TEST(Evaluate, MeanRhoAveragesRawFractions) {
  ClassPromptSet s{{"a", "b"},
                   {EmbeddingContainer(Role::kPrompt, 2, {"p1", "p2", "p3", "p4", "p5"},
                                       {1, 0, 1, 0, 0.8f, 0.6f, 0.8f, 0.6f, 0, 1}, true),
                    EmbeddingContainer(Role::kPrompt, 2, {"q"}, {0, 1}, true)}};
  EmbeddingContainer images(Role::kImage, 2, {"x"}, {1, 0}, true);
  const auto res = evaluate(images, std::vector<std::size_t>{0}, s, options(AggregatorMode::kSoftTrim));
  // Class a sims {1, 1, .8, .8, 0} -> mapped {1, 1, .9, .9, .5}: median .9, mad .1,
  // only .5 is beyond .25 -> 0.2. Class b has one prompt -> 0.
  EXPECT_NEAR(res.records[0].per_class_rho[0], 0.2, 1e-12);
  EXPECT_EQ(res.records[0].per_class_rho[1], 0.0);
  EXPECT_NEAR(res.report.mean_rho, 0.1, 1e-12);
}

TEST(ClassPromptSet, Validation) {
  ClassPromptSet s{{"a"}, {}};
  EXPECT_THROW(s.validate(), DataError);
  ClassPromptSet t{{"a", "b"},
                   {EmbeddingContainer(Role::kPrompt, 2, {"p"}, {1, 0}, true),
                    EmbeddingContainer(Role::kPrompt, 3, {"q"}, {1, 0, 0}, true)}};
  EXPECT_THROW(t.validate(), DataError);
  ClassPromptSet u{{"a"}, {EmbeddingContainer(Role::kPrompt, 2, {}, {}, true)}};
  EXPECT_THROW(u.validate(), DataError);
}

}  // namespace
}  // namespace cgbc
