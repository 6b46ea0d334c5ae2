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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cgbc/soft_trim.hpp"
#include "json.hpp"

namespace cgbc::sim {

// Outlier draws of the Huber contamination model. Values are absolute, not
// relative to mu.
struct PointMass {
  double value = 0.0;
};
struct ShiftedGaussian {
  double offset = 0.0;  // outlier mean is mu + offset
  double scale = 1.0;
};
struct UniformOutliers {
  double lo = 0.0;
  double hi = 1.0;
};
using OutlierModel = std::variant<PointMass, ShiftedGaussian, UniformOutliers>;

struct ContaminationSpec {
  double mu = 0.0;
  double sigma = 1.0;
  double rho = 0.0;
  std::size_t m = 1;
  OutlierModel outliers = PointMass{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct ContaminatedSample {
  std::vector<double> scores;
  std::vector<bool> outlier;
};

// Each score is N(mu, sigma^2) with probability 1 - rho, else an outlier draw.
ContaminatedSample sample_contaminated(const ContaminationSpec& spec);

struct TrialResult {
  double mu_hat_soft = 0.0;
  double mu_hat_mean = 0.0;
  double mu_hat_median = 0.0;
  double err_soft = 0.0;
  double err_mean = 0.0;
  double err_median = 0.0;
  double rho_hat = 0.0;  // clamped estimate used by the weights
  double rho_raw = 0.0;
};

TrialResult run_trial(const ContaminationSpec& spec, const AggregatorConfig& soft_cfg);

// Linear-interpolation (type 7) empirical quantile.
double quantile(std::vector<double> values, double q);

// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

enum class OutlierKind { kPointMass, kShiftedGaussian };

struct SweepConfig {
  std::vector<double> rhos{0.0, 0.05, 0.1, 0.2};
  std::vector<std::size_t> ms{25, 50, 100, 400, 1600};
  std::vector<double> slopes{kClipLogitScale};
  std::size_t trials = 500;
  double delta = 0.05;
  double mu = 0.0;
  double sigma = 1.0;
  double outlier_shift_sigmas = 10.0;
  OutlierKind outlier_kind = OutlierKind::kPointMass;
  double lambda = 2.5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct SweepCell {
  double rho = 0.0;
  std::size_t m = 0;
  double slope = 0.0;
  double q_err_soft = 0.0;  // (1 - delta) quantile of |mu_hat - mu|
  double q_err_mean = 0.0;
  double q_err_median = 0.0;
  double mean_rho_hat = 0.0;
  double frac_soft_beats_mean = 0.0;  // per-trial |soft err| < |mean err|
  std::optional<double> implied_c0;   // M * rho^2 / log(1/delta)
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepCell> cells;
  // Per slope: log-log slope of the soft-trim error quantile against M at rho = 0.
  std::vector<double> loglog_slope_rho0;
  // Per slope: slope of the error quantile against rho at the largest M.
  std::vector<double> error_vs_rho_slope;
};

SweepResult run_theorem1_sweep(const SweepConfig& cfg);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
nlohmann::ordered_json sweep_summary(const SweepResult& result);

struct GoodnessConfig {
  std::vector<double> alphas{0.05, 0.1, 0.2};
  std::size_t m = 10000;
  std::size_t trials = 500;
  double mu = 0.0;
  double sigma = 1.0;
  double max_constant = 5.0;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct GoodnessRow {
  double alpha = 0.0;
  double max_mean_ratio = 0.0;  // |mu_w - mu| / (sigma * alpha * sqrt(log 1/alpha))
  double max_var_ratio = 0.0;   // |var_w - sigma^2| / (sigma^2 * alpha * log 1/alpha)
  bool holds = false;
};

// Clean samples, adversarial weight vectors that zero out floor(alpha * M)
// points (lowest tail, highest tail, or both tails evenly); reports the worst
// mean and variance ratios over trials and strategies.
std::vector<GoodnessRow> check_goodness(const GoodnessConfig& cfg);

struct RiskSpec {
  std::size_t k = 2;
  std::vector<double> margins{0.0};  // cycled over trials, absolute units
  double sigma = 0.05;
  double rho = 0.0;
  std::size_t m = 50;
  double delta = 0.05;
  double base_mean = 0.5;
  double outlier_shift_sigmas = 10.0;

  void validate() const;
};

struct ExcessRiskResult {
  std::size_t trials = 0;
  double mismatch_rate = 0.0;  // argmax mu_hat is not a Bayes-optimal class
  double excess_risk = 0.0;    // mean of mu_best - mu_predicted
  double bound_rate = 0.0;     // Pr[margin <= 2 max_i |mu_hat_i - mu_i|]
  double standard_error = 0.0;
  bool holds = false;
};

ExcessRiskResult run_excess_risk(const RiskSpec& spec, std::size_t trials,
                                 const AggregatorConfig& cfg, std::uint64_t seed,
                                 unsigned workers = 0);

}  // namespace cgbc::sim
