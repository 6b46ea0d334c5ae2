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


#include "cgbc/soft_trim.hpp"

#include <algorithm>
#include <cassert>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cgbc {

std::string_view to_string(AggregatorMode mode) {
  switch (mode) {
    case AggregatorMode::kPriorMean: return "prior_mean";
    case AggregatorMode::kSoftTrim: return "soft_trim";
    case AggregatorMode::kMedianOnly: return "median_only";
    case AggregatorMode::kHardTrim: return "hard_trim";
    case AggregatorMode::kHuber: return "huber";
    case AggregatorMode::kCauchy: return "cauchy";
    case AggregatorMode::kConfidence: return "confidence";
  }
  return "unknown";
}

AggregatorMode aggregator_mode_from_string(std::string_view s) {
  for (auto m : {AggregatorMode::kPriorMean, AggregatorMode::kSoftTrim, AggregatorMode::kMedianOnly,
                 AggregatorMode::kHardTrim, AggregatorMode::kHuber, AggregatorMode::kCauchy,
                 AggregatorMode::kConfidence}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown aggregator '" + std::string(s) + "'");
}

void AggregatorConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(slope > 0.0)) throw std::invalid_argument("slope must be > 0");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("huber_delta must be > 0");
  if (!(cauchy_gamma > 0.0)) throw std::invalid_argument("cauchy_gamma must be > 0");
}

double median(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("median of an empty score set");
  std::vector<double> v(scores.begin(), scores.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mad(std::span<const double> scores, double m) {
  std::vector<double> dev(scores.size());
  std::transform(scores.begin(), scores.end(), dev.begin(), [m](double s) { return std::abs(s - m); });
  return median(dev);
}

double contamination_fraction(std::span<const double> scores, double m, double mad,
                              double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (scores.empty() || mad == 0.0) return 0.0;
  const double cut = lambda * mad;
  const auto n = std::count_if(scores.begin(), scores.end(),
                               [&](double s) { return std::abs(s - m) > cut; });
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

double estimate_rho(std::span<const double> scores, double m, double mad, double lambda) {
  // With M = 1 the floor 1/(2M) would reach 0.5 itself.
  const double hi = 0.5 - kRhoCeilingGap;
  const double lo = std::min(rho_floor(scores.size()), hi);
  if (mad == 0.0) return lo;
  const double raw = contamination_fraction(scores, m, mad, lambda);
  return std::clamp(raw, lo, hi);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> soft_trim_weights(std::span<const double> scores, double m, double mad,
                                      double rho, double slope) {
  if (!(rho > 0.0 && rho < 0.5)) throw std::invalid_argument("rho must lie in (0, 0.5)");
  if (!(slope > 0.0)) throw std::invalid_argument("slope must be > 0");
  std::vector<double> w(scores.size(), 1.0);
  if (mad == 0.0) return w;
  const double logit = std::log((1.0 - rho) / rho);
  constexpr double kFloor = std::numeric_limits<double>::min();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double z = std::abs(scores[j] - m) / mad;
    w[j] = std::max(sigmoid(-logit * slope * z), kFloor);
  }
  return w;
}

double robust_mean(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size() || scores.empty()) {
    throw std::invalid_argument("robust_mean needs equally sized, non-empty inputs");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    num += weights[j] * scores[j];
    den += weights[j];
  }
  assert(den > 0.0);
  if (!(den > 0.0)) throw std::logic_error("robust_mean: weights sum to zero");
  // Clamp guards the hull property against the last ulp of rounding.
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  return std::clamp(num / den, *lo, *hi);
}

SoftTrimEstimate aggregate(std::span<const double> scores, const AggregatorConfig& cfg) {
  cfg.validate();
  if (scores.empty()) throw std::invalid_argument("cannot aggregate an empty score set");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
  }
  SoftTrimEstimate est;
  est.lambda = cfg.lambda;
  est.slope = cfg.slope;
  est.median = median(scores);
  est.mad = mad(scores, est.median);
  est.rho_raw = contamination_fraction(scores, est.median, est.mad, cfg.lambda);
  est.rho_hat = estimate_rho(scores, est.median, est.mad, cfg.lambda);
  const std::size_t n = scores.size();

  // Zero spread gives no basis for reweighting: every mode but median/max
  // then reduces to the plain mean.
  auto deviations_weighted = [&](auto&& weight_of) {
    est.weights.assign(n, 1.0);
    if (est.mad > 0.0) {
      for (std::size_t j = 0; j < n; ++j) est.weights[j] = weight_of(std::abs(scores[j] - est.median));
    }
    est.mu_hat = robust_mean(scores, est.weights);
  };

  switch (cfg.mode) {
    case AggregatorMode::kPriorMean:
      est.weights.assign(n, 1.0);
      est.mu_hat = robust_mean(scores, est.weights);
      break;
    case AggregatorMode::kSoftTrim:
      est.weights = soft_trim_weights(scores, est.median, est.mad, est.rho_hat, cfg.slope);
      est.mu_hat = robust_mean(scores, est.weights);
      break;
    case AggregatorMode::kMedianOnly:
      est.weights.assign(n, 1.0);
      est.mu_hat = est.median;
      break;
    case AggregatorMode::kHardTrim: {
      const double cut = cfg.lambda * est.mad;
      est.weights.resize(n);
      double kept = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        est.weights[j] = std::abs(scores[j] - est.median) <= cut ? 1.0 : 0.0;
        kept += est.weights[j];
      }
      if (kept == 0.0) {
        est.fallback = true;
        est.mu_hat = est.median;
      } else {
        est.mu_hat = robust_mean(scores, est.weights);
      }
      break;
    }
    case AggregatorMode::kHuber:
      deviations_weighted([&](double d) {
        return d == 0.0 ? 1.0 : std::min(1.0, cfg.huber_delta * est.mad / d);
      });
      break;
    case AggregatorMode::kCauchy:
      deviations_weighted([&](double d) {
        const double u = d / (cfg.cauchy_gamma * est.mad);
        return 1.0 / (1.0 + u * u);
      });
      break;
    case AggregatorMode::kConfidence: {
      const auto it = std::max_element(scores.begin(), scores.end());
      est.weights.assign(n, 0.0);
      est.weights[static_cast<std::size_t>(it - scores.begin())] = 1.0;
      est.mu_hat = *it;
      break;
    }
  }
  return est;
}

}  // namespace cgbc
