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


#include "cgbc/diagnostics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cgbc {

DistributionReport describe(std::span<const double> scores) {
  if (scores.size() < 4) {
    throw std::invalid_argument("distribution diagnostics need at least 4 scores, got " +
                                std::to_string(scores.size()));
  }
  DistributionReport r;
  r.n = scores.size();
  const double n = static_cast<double>(r.n);
  double sum = 0.0;
  for (double s : scores) sum += s;
  r.mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double s : scores) {
    const double d = s - r.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  r.std = std::sqrt(m2);
  if (m2 > 0.0) {
    r.skewness = m3 / std::pow(m2, 1.5);
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  } else {
    r.degenerate = true;
  }
  r.skewed = std::abs(r.skewness) > kSkewnessThreshold;
  r.heavy_tailed = r.excess_kurtosis > kExcessKurtosisThreshold;

  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal_distribution<double> standard;
  r.qq_points.reserve(r.n);
  for (std::size_t i = 0; i < r.n; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    r.qq_points.emplace_back(boost::math::quantile(standard, p), sorted[i]);
  }
  return r;
}

nlohmann::ordered_json to_json(const DistributionReport& report) {
  nlohmann::ordered_json j;
  j["n"] = report.n;
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["skewness"] = report.skewness;
  j["excess_kurtosis"] = report.excess_kurtosis;
  j["skewed"] = report.skewed;
  j["heavy_tailed"] = report.heavy_tailed;
  j["degenerate"] = report.degenerate;
  return j;
}

}  // namespace cgbc
