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
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cgbc {

inline constexpr double kSkewnessThreshold = 0.5;
inline constexpr double kExcessKurtosisThreshold = 3.0;

// Shape summary of one similarity distribution, with the normal Q-Q points
// (Hazen plotting positions (i - 0.5) / n).
struct DistributionReport {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  std::vector<std::pair<double, double>> qq_points;  // (theoretical, sample)
  bool skewed = false;        // |skewness| > 0.5
  bool heavy_tailed = false;  // excess kurtosis > 3
  bool degenerate = false;    // zero variance; moments reported as 0
};

// Population-moment skewness m3 / m2^1.5 and excess kurtosis m4 / m2^2 - 3.
// Needs at least 4 scores.
DistributionReport describe(std::span<const double> scores);

nlohmann::ordered_json to_json(const DistributionReport& report);

}  // namespace cgbc
