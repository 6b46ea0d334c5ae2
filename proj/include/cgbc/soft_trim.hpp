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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cgbc {

// Robust aggregation of one class's per-concept scores S_i.
//
// soft_trim: weights w_j = sigmoid(-logit(rho_hat) * k * |S_j - m| / MAD),
// where m is the median, MAD the median absolute deviation and rho_hat the
// fraction of scores beyond lambda * MAD (clamped to [1/(2M), 0.5)). The
// estimate is the weighted mean sum(w S) / sum(w).
//
// The remaining modes are the comparison family: plain mean, median, hard
// trimming at lambda * MAD, Huber and Cauchy reweighting, and max-confidence.
enum class AggregatorMode { kPriorMean, kSoftTrim, kMedianOnly, kHardTrim, kHuber, kCauchy, kConfidence };

std::string_view to_string(AggregatorMode mode);
AggregatorMode aggregator_mode_from_string(std::string_view s);

inline const double kClipLogitScale = std::exp(4.6);

struct AggregatorConfig {
  AggregatorMode mode = AggregatorMode::kSoftTrim;
  double lambda = 2.5;
  double slope = kClipLogitScale;
  double huber_delta = 1.345;
  double cauchy_gamma = 2.385;

  void validate() const;
};

struct SoftTrimEstimate {
  double median = 0.0;
  double mad = 0.0;
  double rho_raw = 0.0;  // unclamped outlier fraction
  double rho_hat = 0.0;  // clamped, as used in the weights
  std::vector<double> weights;
  double mu_hat = 0.0;
  double lambda = 0.0;
  double slope = 0.0;
  bool fallback = false;  // hard_trim removed everything and fell back to the median
};

double median(std::span<const double> scores);
double mad(std::span<const double> scores, double m);

// Raw fraction of scores with |S - m| > lambda * mad (0 when mad == 0).
double contamination_fraction(std::span<const double> scores, double m, double mad, double lambda);

inline double rho_floor(std::size_t count) { return 1.0 / (2.0 * static_cast<double>(count)); }
inline constexpr double kRhoCeilingGap = 1e-6;

// contamination_fraction clamped to [1/(2M), 0.5 - 1e-6]; rho_floor when mad == 0.
double estimate_rho(std::span<const double> scores, double m, double mad, double lambda);

double sigmoid(double x);

// Per-score soft-trim weights. All ones when mad == 0. Weights are kept
// strictly positive (floored at the smallest normal double).
std::vector<double> soft_trim_weights(std::span<const double> scores, double m, double mad,
                                      double rho, double slope);

double robust_mean(std::span<const double> scores, std::span<const double> weights);

SoftTrimEstimate aggregate(std::span<const double> scores, const AggregatorConfig& cfg);

}  // namespace cgbc
