// core/include/svb/metrics.h

// Copyright 2026  The svbackend Authors

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

#ifndef SVB_METRICS_H_
#define SVB_METRICS_H_

#include <array>
#include <span>
#include <vector>

namespace svb {

// All functions take scores s_i and labels t_i in {0, 1} (1 = target) and
// require both classes to be present (DataError otherwise).  A trial is
// accepted when s_i >= theta.

/// Cost ratios of the two operating points of the primary cost.
inline constexpr std::array<double, 2> kDefaultBetas{99.0, 199.0};

struct ErrorRates {
  double p_miss = 0.0;
  double p_fa = 0.0;
};

ErrorRates HardRates(std::span<const double> scores, std::span<const int> labels,
                     double theta);

/// P_miss(theta) + beta P_fa(theta).
double CNorm(std::span<const double> scores, std::span<const int> labels, double beta,
             double theta);

/// Mean over operating points of C_Norm(beta, log beta).
double CPrimaryActual(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas = kDefaultBetas);

struct MinCost {
  double cost = 0.0;
  double theta = 0.0;
};

/// Exhaustive minimum of C_Norm(beta, .) over the midpoints between adjacent
/// distinct scores and -inf/+inf.  Ties resolve to the smallest threshold.
MinCost MinCNorm(std::span<const double> scores, std::span<const int> labels, double beta);

struct CMinResult {
  double c_min = 0.0;
  std::vector<double> thresholds;  // argmin per operating point
  std::vector<double> costs;       // min C_Norm per operating point
};

/// The two-threshold minimum decouples into one MinCNorm per operating point.
CMinResult CMin(std::span<const double> scores, std::span<const int> labels,
                std::span<const double> betas = kDefaultBetas);

struct DetPoint {
  double theta = 0.0;
  double p_fa = 0.0;
  double p_miss = 0.0;
};

/// One point per candidate threshold (see MinCNorm), by increasing theta.
/// The first point is theta = -inf (P_fa = 1, P_miss = 0) and the last is
/// theta = +inf (P_fa = 0, P_miss = 1).
std::vector<DetPoint> DetPoints(std::span<const double> scores, std::span<const int> labels);

/// Equal error rate: linear interpolation between the two adjacent DET
/// points where P_miss - P_fa changes sign.
double EerFromDet(const std::vector<DetPoint> &det);
double Eer(std::span<const double> scores, std::span<const int> labels);

struct MetricReport {
  double eer = 0.0;
  double c_min = 0.0;
  double c_primary = 0.0;
  std::vector<double> theta_min;
  std::vector<DetPoint> det_points;
};

MetricReport Evaluate(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas = kDefaultBetas);

}  // namespace svb

#endif  // SVB_METRICS_H_
