// core/include/svb/gplda.h

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

#ifndef SVB_GPLDA_H_
#define SVB_GPLDA_H_

#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "svb/data_model.h"
#include "svb/preprocess.h"

namespace svb {

/**
   Trial scoring constants of the two-covariance model.  For preprocessed
   enrollment/test embeddings a, b the log-likelihood ratio is

     s = 1/2 a^T Q a + 1/2 b^T Q b + a^T P b + c

   with Q = T^-1 - S^-1, P = T^-1 A S^-1, S = T - A T^-1 A, T = A + W,
   A = Phi Phi^T (across class), W within class, and
   c = 1/2 log(det [[T,0],[0,T]] / det [[T,A],[A,T]]).
*/
struct ScoringParams {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd P;
  double c = 0.0;
};

ScoringParams ComputeScoringParams(const Eigen::MatrixXd &phi, const Eigen::MatrixXd &sigma_wc);

/// Scores already-preprocessed embeddings.
double ScorePreprocessed(const ScoringParams &params, const Eigen::VectorXd &eta_e,
                         const Eigen::VectorXd &eta_t);

/// Generative PLDA back-end: preprocessing chain plus two-covariance model.
class GpldaModel {
 public:
  GpldaModel() = default;
  /// Validates the parameters and computes the derived caches.
  GpldaModel(Preprocessor preprocessor, Eigen::MatrixXd phi, Eigen::MatrixXd sigma_wc);

  const Preprocessor &GetPreprocessor() const { return preprocessor_; }
  const Eigen::MatrixXd &Phi() const { return phi_; }
  const Eigen::MatrixXd &SigmaWc() const { return sigma_wc_; }
  const Eigen::MatrixXd &SigmaAc() const { return sigma_ac_; }
  const Eigen::MatrixXd &SigmaTot() const { return sigma_tot_; }
  const ScoringParams &Scoring() const { return scoring_; }

  int Dim() const { return preprocessor_.InputDim(); }
  int LatentDim() const { return static_cast<int>(phi_.rows()); }

  Eigen::VectorXd Embed(const Eigen::VectorXd &x) const {
    return ApplyPreprocessor(preprocessor_, x);
  }

 private:
  Preprocessor preprocessor_;
  Eigen::MatrixXd phi_, sigma_wc_;
  Eigen::MatrixXd sigma_ac_, sigma_tot_;
  ScoringParams scoring_;
};

struct PldaParams {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd sigma_wc;
};

/**
   Marginal log-likelihood of preprocessed rows under the zero-mean
   two-covariance model: the rows of one speaker are jointly Gaussian with
   covariance I (x) W + 11^T (x) A.  Unlabeled rows (speaker -1) are skipped.
*/
double PldaLogLikelihood(const Eigen::MatrixXd &eta, const std::vector<int> &speaker_of_row,
                         int num_speakers, const PldaParams &params);

/**
   EM for the two-covariance model eta_r = Phi omega + eps_r, omega ~ N(0, I),
   eps_r ~ N(0, W).  Initialization is the sample between/within scatter;
   em_iters = 0 returns it unchanged.  If `loglik_trace` is non-null it
   receives the log-likelihood of the initialization followed by the value
   after every iteration.
*/
PldaParams FitPlda(const Eigen::MatrixXd &eta, const std::vector<int> &speaker_of_row,
                   int num_speakers, int em_iters,
                   std::vector<double> *loglik_trace = nullptr);

struct GpldaConfig {
  int lda_dim = 0;  // 0 selects DefaultLdaDim
  int em_iters = 10;
};

/// FitPreprocessor on the labeled rows followed by FitPlda on the
/// preprocessed embeddings.
GpldaModel FitGplda(const EmbeddingSet &data, const GpldaConfig &config,
                    std::vector<double> *loglik_trace = nullptr);

/// LLR of a trial on raw (un-preprocessed) embeddings.
double ScoreTrial(const GpldaModel &model, const Eigen::VectorXd &x_e,
                  const Eigen::VectorXd &x_t);

/// Scores every trial; each utterance is preprocessed once.  Unknown ids
/// raise DataError naming the trial index.
ScoreSet ScoreTrials(const GpldaModel &model, const EmbeddingSet &embeddings,
                     const TrialList &trials);

/// Multi-session enrollment: model id -> utterance ids.
using EnrollmentMap = std::unordered_map<std::string, std::vector<std::string>>;

/// Replaces every enrollment model in `map` by the average of its raw
/// utterance embeddings and appends it to `embeddings` under the model id.
EmbeddingSet AddEnrollmentModels(const EmbeddingSet &embeddings, const EnrollmentMap &map);

/// Parses lines "model_id utt1 utt2 ...".
EnrollmentMap LoadEnrollmentMap(const std::string &path);

}  // namespace svb

#endif  // SVB_GPLDA_H_
