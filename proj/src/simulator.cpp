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


#include "cgbc/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "cgbc/classifier.hpp"
#include "cgbc/parallel.hpp"
#include "cgbc/rng.hpp"

namespace cgbc::sim {
namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

void ContaminationSpec::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(rho >= 0.0 && rho < 0.5)) throw std::invalid_argument("rho must lie in [0, 0.5)");
  if (m < 1) throw std::invalid_argument("M must be >= 1");
}

ContaminatedSample sample_contaminated(const ContaminationSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution is_outlier(spec.rho);
  ContaminatedSample out;
  out.scores.reserve(spec.m);
  out.outlier.reserve(spec.m);
  for (std::size_t j = 0; j < spec.m; ++j) {
    const bool bad = is_outlier(rng);
    double s;
    if (!bad) {
      s = spec.mu + spec.sigma * gauss(rng);
    } else if (const auto* pm = std::get_if<PointMass>(&spec.outliers)) {
      s = pm->value;
    } else if (const auto* sg = std::get_if<ShiftedGaussian>(&spec.outliers)) {
      s = spec.mu + sg->offset + sg->scale * gauss(rng);
    } else {
      const auto& u = std::get<UniformOutliers>(spec.outliers);
      s = std::uniform_real_distribution<double>(u.lo, u.hi)(rng);
    }
    out.scores.push_back(s);
    out.outlier.push_back(bad);
  }
  return out;
}

TrialResult run_trial(const ContaminationSpec& spec, const AggregatorConfig& soft_cfg) {
  const auto sample = sample_contaminated(spec);
  AggregatorConfig cfg = soft_cfg;
  cfg.mode = AggregatorMode::kSoftTrim;
  const auto est = aggregate(sample.scores, cfg);
  TrialResult r;
  r.mu_hat_soft = est.mu_hat;
  r.mu_hat_mean = mean_of(sample.scores);
  r.mu_hat_median = est.median;
  r.err_soft = std::abs(r.mu_hat_soft - spec.mu);
  r.err_mean = std::abs(r.mu_hat_mean - spec.mu);
  r.err_median = std::abs(r.mu_hat_median - spec.mu);
  r.rho_hat = est.rho_hat;
  r.rho_raw = est.rho_raw;
  return r;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double idx = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  const auto hi = static_cast<std::size_t>(std::ceil(idx));
  return values[lo] + (values[hi] - values[lo]) * (idx - static_cast<double>(lo));
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols needs >= 2 points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols with constant x");
  return sxy / sxx;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs >= 2 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

SweepResult run_theorem1_sweep(const SweepConfig& cfg) {
  if (cfg.rhos.empty() || cfg.ms.empty() || cfg.slopes.empty() || cfg.trials == 0) {
    throw std::invalid_argument("sweep grid must be non-empty");
  }
  SweepResult res;
  res.config = cfg;
  const double q = 1.0 - cfg.delta;
  for (std::size_t si = 0; si < cfg.slopes.size(); ++si) {
    AggregatorConfig agg;
    agg.lambda = cfg.lambda;
    agg.slope = cfg.slopes[si];
    for (std::size_t ri = 0; ri < cfg.rhos.size(); ++ri) {
      for (std::size_t mi = 0; mi < cfg.ms.size(); ++mi) {
        ContaminationSpec base;
        base.mu = cfg.mu;
        base.sigma = cfg.sigma;
        base.rho = cfg.rhos[ri];
        base.m = cfg.ms[mi];
        const double shift = cfg.outlier_shift_sigmas * cfg.sigma;
        if (cfg.outlier_kind == OutlierKind::kPointMass) {
          base.outliers = PointMass{cfg.mu + shift};
        } else {
          base.outliers = ShiftedGaussian{shift, cfg.sigma};
        }
        std::vector<TrialResult> trials(cfg.trials);
        // Trial streams ignore the slope index so every slope sees the same samples.
        parallel_for(cfg.trials, [&](std::size_t t) {
          ContaminationSpec spec = base;
          spec.seed = derive_seed(cfg.seed, {ri, mi, t});
          trials[t] = run_trial(spec, agg);
        }, cfg.workers);

        SweepCell cell;
        cell.rho = base.rho;
        cell.m = base.m;
        cell.slope = agg.slope;
        std::vector<double> es, em, ed;
        double rho_sum = 0.0;
        std::size_t better = 0;
        for (const auto& t : trials) {
          es.push_back(t.err_soft);
          em.push_back(t.err_mean);
          ed.push_back(t.err_median);
          rho_sum += t.rho_hat;
          if (t.err_soft < t.err_mean) ++better;
        }
        cell.q_err_soft = quantile(es, q);
        cell.q_err_mean = quantile(em, q);
        cell.q_err_median = quantile(ed, q);
        cell.mean_rho_hat = rho_sum / static_cast<double>(cfg.trials);
        cell.frac_soft_beats_mean = static_cast<double>(better) / static_cast<double>(cfg.trials);
        if (base.rho > 0.0) {
          cell.implied_c0 = static_cast<double>(base.m) * base.rho * base.rho / std::log(1.0 / cfg.delta);
        }
        res.cells.push_back(cell);
      }
    }

    std::vector<double> lx, ly;
    for (const auto& c : res.cells) {
      if (c.slope == agg.slope && c.rho == 0.0 && c.q_err_soft > 0.0) {
        lx.push_back(std::log(static_cast<double>(c.m)));
        ly.push_back(std::log(c.q_err_soft));
      }
    }
    res.loglog_slope_rho0.push_back(lx.size() >= 2 ? ols_slope(lx, ly) : std::nan(""));

    const std::size_t big_m = *std::max_element(cfg.ms.begin(), cfg.ms.end());
    std::vector<double> rx, ry;
    for (const auto& c : res.cells) {
      if (c.slope == agg.slope && c.m == big_m) {
        rx.push_back(c.rho);
        ry.push_back(c.q_err_soft);
      }
    }
    res.error_vs_rho_slope.push_back(rx.size() >= 2 ? ols_slope(rx, ry) : std::nan(""));
  }
  return res;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "rho,M,slope,q95_err_soft,q95_err_mean,q95_err_median,mean_rho_hat\n";
  for (const auto& c : result.cells) {
    out << fmt::format("{},{},{},{},{},{},{}\n", c.rho, c.m, c.slope, c.q_err_soft, c.q_err_mean,
                       c.q_err_median, c.mean_rho_hat);
  }
}

nlohmann::ordered_json sweep_summary(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["trials"] = result.config.trials;
  j["delta"] = result.config.delta;
  j["outlier_shift_sigmas"] = result.config.outlier_shift_sigmas;
  j["outlier_kind"] =
      result.config.outlier_kind == OutlierKind::kPointMass ? "point_mass" : "shifted_gaussian";
  auto fits = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.config.slopes.size(); ++i) {
    nlohmann::ordered_json f;
    f["slope"] = result.config.slopes[i];
    f["loglog_slope_rho0"] = result.loglog_slope_rho0[i];
    f["error_vs_rho_slope_at_max_M"] = result.error_vs_rho_slope[i];
    fits.push_back(std::move(f));
  }
  j["fits"] = std::move(fits);
  auto cells = nlohmann::ordered_json::array();
  for (const auto& c : result.cells) {
    nlohmann::ordered_json e;
    e["rho"] = c.rho;
    e["M"] = c.m;
    e["slope"] = c.slope;
    e["frac_soft_beats_mean"] = c.frac_soft_beats_mean;
    e["implied_c0"] = c.implied_c0 ? nlohmann::ordered_json(*c.implied_c0) : nlohmann::ordered_json();
    cells.push_back(std::move(e));
  }
  j["cells"] = std::move(cells);
  return j;
}

std::vector<GoodnessRow> check_goodness(const GoodnessConfig& cfg) {
  if (cfg.m < 2 || cfg.trials == 0) throw std::invalid_argument("goodness check needs M >= 2 and trials >= 1");
  std::vector<GoodnessRow> rows;
  for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
    const double alpha = cfg.alphas[ai];
    // alpha = 0 leaves a 0/0 ratio; nothing to check.
    if (!(alpha > 0.0 && alpha < 1.0)) continue;
    const auto drop = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(cfg.m)));
    const double mean_scale = cfg.sigma * alpha * std::sqrt(std::log(1.0 / alpha));
    const double var_scale = cfg.sigma * cfg.sigma * alpha * std::log(1.0 / alpha);
    std::vector<double> mean_ratio(cfg.trials), var_ratio(cfg.trials);
    parallel_for(cfg.trials, [&](std::size_t t) {
      Rng rng = make_stream(cfg.seed, {ai, t});
      std::normal_distribution<double> gauss(cfg.mu, cfg.sigma);
      std::vector<double> x(cfg.m);
      for (double& v : x) v = gauss(rng);
      std::sort(x.begin(), x.end());
      double worst_mean = 0.0, worst_var = 0.0;
      const std::size_t half = drop / 2;
      for (auto [lo, hi] : {std::pair{drop, cfg.m}, std::pair{std::size_t{0}, cfg.m - drop},
                            std::pair{half, cfg.m - (drop - half)}}) {
        const std::span<const double> kept(x.data() + lo, hi - lo);
        const double mu_w = mean_of(kept);
        double var_w = 0.0;
        for (double v : kept) var_w += (v - mu_w) * (v - mu_w);
        var_w /= static_cast<double>(kept.size());
        worst_mean = std::max(worst_mean, std::abs(mu_w - cfg.mu) / mean_scale);
        worst_var = std::max(worst_var, std::abs(var_w - cfg.sigma * cfg.sigma) / var_scale);
      }
      mean_ratio[t] = worst_mean;
      var_ratio[t] = worst_var;
    }, cfg.workers);
    GoodnessRow row;
    row.alpha = alpha;
    row.max_mean_ratio = *std::max_element(mean_ratio.begin(), mean_ratio.end());
    row.max_var_ratio = *std::max_element(var_ratio.begin(), var_ratio.end());
    row.holds = row.max_mean_ratio <= cfg.max_constant && row.max_var_ratio <= cfg.max_constant;
    rows.push_back(row);
  }
  return rows;
}

void RiskSpec::validate() const {
  if (k < 2) throw std::invalid_argument("excess-risk simulation needs K >= 2");
  if (margins.empty()) throw std::invalid_argument("margins must be non-empty");
  for (double mg : margins) {
    if (!(mg >= 0.0)) throw std::invalid_argument("margins must be non-negative");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (!(rho >= 0.0 && rho < 0.5)) throw std::invalid_argument("rho must lie in [0, 0.5)");
  if (m < 1) throw std::invalid_argument("M must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
}

ExcessRiskResult run_excess_risk(const RiskSpec& spec, std::size_t trials,
                                 const AggregatorConfig& cfg, std::uint64_t seed,
                                 unsigned workers) {
  spec.validate();
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  struct Outcome {
    bool mismatch;
    bool bound;
    double excess;
  };
  std::vector<Outcome> outcomes(trials);
  parallel_for(trials, [&](std::size_t t) {
    Rng rng = make_stream(seed, {t});
    const double margin = spec.margins[t % spec.margins.size()];
    std::uniform_int_distribution<std::size_t> pick(0, spec.k - 1);
    std::uniform_real_distribution<double> gap(0.0, 4.0 * spec.sigma);
    const std::size_t best = pick(rng);
    std::size_t second = pick(rng);
    while (second == best) second = pick(rng);

    std::vector<double> mu(spec.k);
    for (std::size_t i = 0; i < spec.k; ++i) {
      if (i == best) mu[i] = spec.base_mean;
      else if (i == second) mu[i] = spec.base_mean - margin;
      else mu[i] = spec.base_mean - margin - gap(rng);
    }
    std::vector<double> est(spec.k);
    double max_err = 0.0;
    for (std::size_t i = 0; i < spec.k; ++i) {
      ContaminationSpec cs;
      cs.mu = mu[i];
      cs.sigma = spec.sigma;
      cs.rho = spec.rho;
      cs.m = spec.m;
      const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
      cs.outliers = PointMass{mu[i] + sign * spec.outlier_shift_sigmas * spec.sigma};
      cs.seed = derive_seed(seed, {t, i + 1});
      est[i] = aggregate(sample_contaminated(cs).scores, cfg).mu_hat;
      max_err = std::max(max_err, std::abs(est[i] - mu[i]));
    }
    const std::size_t pred = argmax_lowest(est);
    std::vector<double> sorted = mu;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const double true_margin = sorted[0] - sorted[1];
    outcomes[t] = {mu[pred] < mu[best], true_margin <= 2.0 * max_err, mu[best] - mu[pred]};
  }, workers);

  ExcessRiskResult r;
  r.trials = trials;
  for (const auto& o : outcomes) {
    r.mismatch_rate += o.mismatch;
    r.bound_rate += o.bound;
    r.excess_risk += o.excess;
  }
  const double n = static_cast<double>(trials);
  r.mismatch_rate /= n;
  r.bound_rate /= n;
  r.excess_risk /= n;
  r.standard_error = std::sqrt((r.mismatch_rate * (1 - r.mismatch_rate) +
                                r.bound_rate * (1 - r.bound_rate)) / n);
  r.holds = r.mismatch_rate <= r.bound_rate + 3.0 * r.standard_error;
  return r;
}

}  // namespace cgbc::sim
