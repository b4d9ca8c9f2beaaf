// core/include/svb/nplda.h

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

#ifndef SVB_NPLDA_H_
#define SVB_NPLDA_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "svb/data_model.h"
#include "svb/gplda.h"

namespace svb {

/// Trainable parameters of the pairwise network.  Also used as the gradient
/// container (same shapes).
struct NpldaParams {
  Eigen::MatrixXd w1;  // R x D
  Eigen::VectorXd b1;  // R
  Eigen::MatrixXd w2;  // R x R
  Eigen::VectorXd b2;  // R
  Eigen::MatrixXd P;   // R x R
  Eigen::MatrixXd Q;   // R x R
  double c = 0.0;
  std::array<double, 2> theta{};

  /// Number of scalars; Pack() returns a vector of this length.
  Eigen::Index Size() const;
  Eigen::VectorXd Pack() const;
  /// Inverse of Pack(); shapes are taken from *this.
  void Unpack(const Eigen::VectorXd &flat);
  bool AllFinite() const;
};

/**
   Neural PLDA: each side goes through affine1 -> length norm -> affine2 and
   the pair is scored by the quadratic layer

     s = 1/2 a^T Q a + 1/2 b^T Q b + 1/2 (a^T P b + b^T P a) + c,

   which is exactly symmetric in its two inputs.
   alpha (sigmoid warping) and the two cost ratios beta are fixed
   hyperparameters; the thresholds theta are trainable.
*/
struct NpldaModel {
  NpldaParams params;
  double alpha = 15.0;
  std::array<double, 2> beta{99.0, 199.0};

  int Dim() const { return static_cast<int>(params.w1.cols()); }
  int LatentDim() const { return static_cast<int>(params.w1.rows()); }
};

inline constexpr double kDefaultAlpha = 15.0;

/// Copies the GPLDA chain and scoring constants into the network; thresholds
/// start at log(beta_k).  Q and P are symmetrized.
NpldaModel InitFromGplda(const GpldaModel &model, double alpha = kDefaultAlpha,
                         std::array<double, 2> beta = {99.0, 199.0});

/// affine1 -> length norm -> affine2 for one input.
Eigen::VectorXd NpldaEmbed(const NpldaModel &model, const Eigen::VectorXd &x);

double NpldaForward(const NpldaModel &model, const Eigen::VectorXd &x_e,
                    const Eigen::VectorXd &x_t);

ScoreSet ScoreTrials(const NpldaModel &model, const EmbeddingSet &embeddings,
                     const TrialList &trials);

/**
   P_miss_soft(theta) + beta P_fa_soft(theta) where the indicators of the hard
   rates are replaced by sigmoid(alpha (s - theta)).  labels are t_i in {0, 1}
   with 1 = target; both classes must be present.
*/
double SoftDetectionCost(std::span<const double> scores, std::span<const int> labels,
                         double alpha, double beta, double theta);

/// Trial referencing rows of an embedding matrix (rows are utterances).
struct IndexedTrial {
  std::size_t enroll;
  std::size_t test;
  int target;  // 1 = target, 0 = nontarget
};

/// Resolves ids of labeled trials against `embeddings`.
std::vector<IndexedTrial> IndexTrials(const EmbeddingSet &embeddings, const TrialList &trials);

/// Forward scores of a batch; `rows` is N x D.
Eigen::VectorXd NpldaBatchScores(const NpldaModel &model, const Eigen::MatrixXd &rows,
                                 std::span<const IndexedTrial> batch);

/// 1/2 [C_soft(beta_1, theta_1) + C_soft(beta_2, theta_2)] over the batch.
double NpldaLoss(const NpldaModel &model, const Eigen::MatrixXd &rows,
                 std::span<const IndexedTrial> batch);

struct LossAndGradient {
  double loss = 0.0;
  NpldaParams grad;
};

/// Loss and its exact gradient with respect to every trainable parameter.
/// Q and P are treated as unconstrained matrices.
LossAndGradient NpldaLossGradients(const NpldaModel &model, const Eigen::MatrixXd &rows,
                                   std::span<const IndexedTrial> batch);

struct NpldaTrainConfig {
  std::size_t batch_size = 4096;
  int epochs = 20;
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

/**
   Splits trial indices into ceil(N / batch_size) batches (capped so every
   batch holds both classes).  Targets and nontargets are shuffled separately
   and dealt out so that every batch keeps the global target:nontarget ratio
   to within one trial.
*/
std::vector<std::vector<std::size_t>> ComposeBatches(std::span<const int> labels,
                                                     std::size_t batch_size,
                                                     std::mt19937_64 &rng);

struct NpldaTrainResult {
  NpldaModel model;
  std::vector<double> loss_trace;  // one entry per batch, loss before the step
  std::vector<double> valid_cmin;  // one entry per epoch when validating
  int best_epoch = 0;              // 1-based; 0 when no validation set
};

/**
   Adam on the soft detection cost.  Q and P are symmetrized after every
   step.  With a validation trial list the epoch with the lowest validation
   C_min is returned; otherwise the final parameters.  Throws NumericError on
   a non-finite loss or parameter.
*/
NpldaTrainResult TrainNplda(const NpldaModel &init, const EmbeddingSet &embeddings,
                            const TrialList &train, const NpldaTrainConfig &config,
                            const TrialList *valid = nullptr);

}  // namespace svb

#endif  // SVB_NPLDA_H_
