// core/include/svb/postproc.h

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

#ifndef SVB_POSTPROC_H_
#define SVB_POSTPROC_H_

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "svb/data_model.h"
#include "svb/metrics.h"

namespace svb {

// ---------------------------------------------------------------------------
// Adaptive symmetric score normalization.

/// Scores of trial-side utterances against a fixed cohort.  Each vector is
/// aligned with cohort_ids.
struct CohortScores {
  std::vector<std::string> cohort_ids;
  std::unordered_map<std::string, std::vector<double>> by_id;

  std::size_t CohortSize() const { return cohort_ids.size(); }
};

/// Builds cohort vectors from score lines "id cohort_id score".  Every id
/// must have exactly one score per declared cohort id.
CohortScores MakeCohortScores(const ScoreSet &lines, std::vector<std::string> cohort_ids);

/// Reads a cohort id list (one id per line).
std::vector<std::string> LoadIdList(const std::string &path);

/// Default top_k: min(200, cohort size).
std::size_t DefaultTopK(std::size_t cohort_size);

/**
   s' = 1/2 [(s - mu_e) / sd_e + (s - mu_t) / sd_t], where mu/sd are the mean
   and unbiased standard deviation of the top_k highest cohort scores of the
   enrollment and test side (ties ordered by cohort id).
*/
ScoreSet AsNorm(const ScoreSet &raw, const CohortScores &cohort, std::size_t top_k);

// ---------------------------------------------------------------------------
// Linear calibration and fusion by prior-weighted logistic regression.

/// Default effective prior: mean of 1 / (1 + beta) over the operating points.
double DefaultEffectivePrior(std::span<const double> betas = kDefaultBetas);

/// Order-preserving affine map s' = a s + b (a > 0).
struct AffineCalibration {
  double a = 1.0;
  double b = 0.0;
};

struct LogisticConfig {
  double effective_prior = 0.0075;
  double l2 = 1e-4;
  int max_iters = 100;
  double tolerance = 1e-10;  // on the gradient norm
};

/// Per-iteration objective values, for inspection.
struct SolverTrace {
  std::vector<double> objective;
  double final_gradient_norm = 0.0;
  int iterations = 0;
};

/**
   Minimizes
     pi/N_t sum_tgt softplus(-(a s + b + logit pi))
       + (1-pi)/N_n sum_non softplus(a s + b + logit pi) + l2 a^2
   by damped Newton.  The scale is constrained to a >= 1e-9.  Throws
   NumericError when the gradient norm is not below `tolerance` after
   max_iters iterations.
*/
AffineCalibration FitCalibration(std::span<const double> scores, std::span<const int> labels,
                                 const LogisticConfig &config, SolverTrace *trace = nullptr);

std::vector<double> ApplyCalibration(std::span<const double> scores,
                                     const AffineCalibration &cal);
ScoreSet ApplyCalibration(const ScoreSet &scores, const AffineCalibration &cal);

/**
   Legacy shift calibration: scale by the inverse pooled within-class score
   standard deviation, then shift so that the average of the C_min
   thresholds lands on the average of log(beta).
*/
AffineCalibration FitShiftCalibration(std::span<const double> scores,
                                      std::span<const int> labels,
                                      std::span<const double> betas = kDefaultBetas);

struct FusionModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

/// score_matrix is K x N (systems x trials).  Same objective as calibration
/// with w^T s replacing a s and penalty l2 |w|^2.  Throws NumericError if the
/// problem is rank deficient with l2 = 0.
FusionModel FitFusion(const Eigen::MatrixXd &score_matrix, std::span<const int> labels,
                      const LogisticConfig &config, SolverTrace *trace = nullptr);

Eigen::VectorXd ApplyFusion(const Eigen::MatrixXd &score_matrix, const FusionModel &model);

/// Key-value parameter files: "a=..." / "b=..." and "w1=...", ..., "bias=...".
void WriteCalibration(const AffineCalibration &cal, const std::string &path);
AffineCalibration LoadCalibration(const std::string &path);
void WriteFusion(const FusionModel &model, const std::string &path);
FusionModel LoadFusion(const std::string &path);

}  // namespace svb

#endif  // SVB_POSTPROC_H_
