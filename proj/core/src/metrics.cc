// core/src/metrics.cc

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

#include "svb/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "svb/error.h"

namespace svb {

namespace {

struct ClassCounts {
  std::size_t targets = 0;
  std::size_t nontargets = 0;
};

ClassCounts CheckInput(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw DataError("metrics: " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
  ClassCounts c;
  for (int t : labels) {
    if (t == 1) ++c.targets;
    else if (t == 0) ++c.nontargets;
    else throw DataError("metrics: labels must be 0 or 1");
  }
  if (c.targets == 0 || c.nontargets == 0)
    throw DataError("metrics: both target and nontarget trials are required");
  return c;
}

/// Distinct sorted score values with per-class multiplicities.
struct Staircase {
  std::vector<double> values;
  std::vector<std::size_t> targets;
  std::vector<std::size_t> nontargets;
};

Staircase BuildStaircase(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  Staircase st;
  for (std::size_t k : order) {
    if (st.values.empty() || scores[k] != st.values.back()) {
      st.values.push_back(scores[k]);
      st.targets.push_back(0);
      st.nontargets.push_back(0);
    }
    if (labels[k] == 1) ++st.targets.back();
    else ++st.nontargets.back();
  }
  return st;
}

double Cost(std::size_t misses, std::size_t fas, const ClassCounts &n, double beta) {
  return static_cast<double>(misses) / static_cast<double>(n.targets) +
         beta * (static_cast<double>(fas) / static_cast<double>(n.nontargets));
}

}  // namespace

ErrorRates HardRates(std::span<const double> scores, std::span<const int> labels,
                     double theta) {
  ClassCounts n = CheckInput(scores, labels);
  std::size_t misses = 0, fas = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1 && scores[i] < theta) ++misses;
    if (labels[i] == 0 && scores[i] >= theta) ++fas;
  }
  return {static_cast<double>(misses) / static_cast<double>(n.targets),
          static_cast<double>(fas) / static_cast<double>(n.nontargets)};
}

double CNorm(std::span<const double> scores, std::span<const int> labels, double beta,
             double theta) {
  ErrorRates r = HardRates(scores, labels, theta);
  return r.p_miss + beta * r.p_fa;
}

double CPrimaryActual(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas) {
  if (betas.empty()) throw UsageError("CPrimaryActual: no operating points");
  double sum = 0.0;
  for (double beta : betas) sum += CNorm(scores, labels, beta, std::log(beta));
  return sum / static_cast<double>(betas.size());
}

std::vector<DetPoint> DetPoints(std::span<const double> scores, std::span<const int> labels) {
  ClassCounts n = CheckInput(scores, labels);
  Staircase st = BuildStaircase(scores, labels);
  std::vector<DetPoint> out;
  out.reserve(st.values.size() + 1);
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t misses = 0, fas = n.nontargets;
  auto push = [&](double theta) {
    out.push_back({theta, static_cast<double>(fas) / static_cast<double>(n.nontargets),
                   static_cast<double>(misses) / static_cast<double>(n.targets)});
  };
  push(-inf);
  for (std::size_t j = 0; j < st.values.size(); ++j) {
    misses += st.targets[j];
    fas -= st.nontargets[j];
    push(j + 1 < st.values.size() ? std::midpoint(st.values[j], st.values[j + 1]) : inf);
  }
  return out;
}

MinCost MinCNorm(std::span<const double> scores, std::span<const int> labels, double beta) {
  ClassCounts n = CheckInput(scores, labels);
  Staircase st = BuildStaircase(scores, labels);
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t misses = 0, fas = n.nontargets;
  MinCost best{Cost(misses, fas, n, beta), -inf};
  for (std::size_t j = 0; j < st.values.size(); ++j) {
    misses += st.targets[j];
    fas -= st.nontargets[j];
    double cost = Cost(misses, fas, n, beta);
    if (cost < best.cost) {
      best.cost = cost;
      best.theta = j + 1 < st.values.size() ? std::midpoint(st.values[j], st.values[j + 1]) : inf;
    }
  }
  return best;
}

CMinResult CMin(std::span<const double> scores, std::span<const int> labels,
                std::span<const double> betas) {
  if (betas.empty()) throw UsageError("CMin: no operating points");
  CMinResult out;
  double sum = 0.0;
  for (double beta : betas) {
    MinCost m = MinCNorm(scores, labels, beta);
    out.thresholds.push_back(m.theta);
    out.costs.push_back(m.cost);
    sum += m.cost;
  }
  out.c_min = sum / static_cast<double>(betas.size());
  return out;
}

double EerFromDet(const std::vector<DetPoint> &det) {
  if (det.empty()) throw DataError("EER: empty DET curve");
  for (std::size_t k = 0; k < det.size(); ++k) {
    double d1 = det[k].p_fa - det[k].p_miss;
    if (d1 > 0) continue;
    if (k == 0) return det[0].p_miss;
    double d0 = det[k - 1].p_fa - det[k - 1].p_miss;
    double t = d0 / (d0 - d1);
    return det[k - 1].p_miss + t * (det[k].p_miss - det[k - 1].p_miss);
  }
  return det.back().p_miss;
}

double Eer(std::span<const double> scores, std::span<const int> labels) {
  return EerFromDet(DetPoints(scores, labels));
}

MetricReport Evaluate(std::span<const double> scores, std::span<const int> labels,
                      std::span<const double> betas) {
  MetricReport r;
  r.det_points = DetPoints(scores, labels);
  r.eer = EerFromDet(r.det_points);
  CMinResult cm = CMin(scores, labels, betas);
  r.c_min = cm.c_min;
  r.theta_min = cm.thresholds;
  r.c_primary = CPrimaryActual(scores, labels, betas);
  return r;
}

}  // namespace svb
