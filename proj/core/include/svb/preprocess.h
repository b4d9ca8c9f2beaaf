// core/include/svb/preprocess.h

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

#ifndef SVB_PREPROCESS_H_
#define SVB_PREPROCESS_H_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "svb/data_model.h"

namespace svb {

/// Length normalization fails below this norm.
inline constexpr double kMinNorm = 1e-12;

/**
   The embedding preprocessing chain

     x -> y = lda (x - mean) -> y / |y| -> eta = diag_transform (y/|y| - norm_mean)

   lda is R x D, diag_transform is R x R.  diag_transform and norm_mean center
   the length-normalized training data and make its within-class covariance
   the identity and its between-class covariance diagonal (eigenvalues in
   decreasing order).
*/
struct Preprocessor {
  Eigen::VectorXd mean;
  Eigen::MatrixXd lda;
  Eigen::VectorXd norm_mean;
  Eigen::MatrixXd diag_transform;

  int InputDim() const { return static_cast<int>(mean.size()); }
  int LdaDim() const { return static_cast<int>(lda.rows()); }

  /// Identity chain of dimension d (mean 0, lda I, diag I): reduces
  /// to plain length normalization.
  static Preprocessor Identity(int d);
};

/// Within/between class scatter of labeled rows, normalized by the number of
/// labeled rows: within = 1/N sum_r (x_r - mu_s)(x_r - mu_s)^T,
/// between = 1/N sum_s n_s (mu_s - mu)(mu_s - mu)^T.
struct ClassScatter {
  Eigen::VectorXd mean;
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
};

ClassScatter ComputeClassScatter(const Eigen::MatrixXd &rows,
                                 const std::vector<int> &speaker_of_row,
                                 int num_speakers);

/// min(150, dim, num_speakers - 1).
int DefaultLdaDim(int dim, int num_speakers);

/// LDA projection (lda_dim x D) from the generalized eigenproblem
/// between v = l within v, within regularized by 1e-6 trace/D I.  Rows are
/// ordered by decreasing eigenvalue and scaled so that v^T within v = 1.
Eigen::MatrixXd ComputeLda(const ClassScatter &scatter, int lda_dim);

/// Fits the chain on the labeled rows of `data`.  Requires >= 2 speakers
/// with >= 2 utterances each and 1 <= lda_dim <= min(D, #speakers - 1).
Preprocessor FitPreprocessor(const EmbeddingSet &data, int lda_dim);

/// v / |v|; throws NumericError when |v| <= kMinNorm.
Eigen::VectorXd LengthNormalize(const Eigen::VectorXd &v);

Eigen::VectorXd ApplyPreprocessor(const Preprocessor &p, const Eigen::VectorXd &x);

/// Row-wise ApplyPreprocessor; returns an N x R matrix.
Eigen::MatrixXd ApplyPreprocessor(const Preprocessor &p, const Eigen::MatrixXd &rows);

}  // namespace svb

#endif  // SVB_PREPROCESS_H_
