// core/src/preprocess.cc

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

#include "svb/preprocess.h"

#include <algorithm>
#include <string>

#include "svb/error.h"
#include "svb/linalg.h"

namespace svb {

Preprocessor Preprocessor::Identity(int d) {
  Preprocessor p;
  p.mean = Eigen::VectorXd::Zero(d);
  p.lda = Eigen::MatrixXd::Identity(d, d);
  p.norm_mean = Eigen::VectorXd::Zero(d);
  p.diag_transform = Eigen::MatrixXd::Identity(d, d);
  return p;
}

ClassScatter ComputeClassScatter(const Eigen::MatrixXd &rows,
                                 const std::vector<int> &speaker_of_row,
                                 int num_speakers) {
  const Eigen::Index d = rows.cols();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(num_speakers, d);
  std::vector<double> counts(num_speakers, 0.0);
  double n = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    int s = speaker_of_row[i];
    if (s < 0) continue;
    sums.row(s) += rows.row(i);
    counts[s] += 1.0;
    n += 1.0;
  }
  if (n == 0.0) throw DataError("class scatter: no labeled rows");

  ClassScatter out;
  out.mean = sums.colwise().sum().transpose() / n;
  Eigen::MatrixXd means = sums;
  for (int s = 0; s < num_speakers; ++s)
    if (counts[s] > 0) means.row(s) /= counts[s];

  out.within = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    int s = speaker_of_row[i];
    if (s < 0) continue;
    Eigen::VectorXd r = (rows.row(i) - means.row(s)).transpose();
    out.within.noalias() += r * r.transpose();
  }
  out.within /= n;

  out.between = Eigen::MatrixXd::Zero(d, d);
  for (int s = 0; s < num_speakers; ++s) {
    if (counts[s] == 0) continue;
    Eigen::VectorXd r = means.row(s).transpose() - out.mean;
    out.between.noalias() += counts[s] * r * r.transpose();
  }
  out.between /= n;
  return out;
}

int DefaultLdaDim(int dim, int num_speakers) {
  return std::max(1, std::min({150, dim, num_speakers - 1}));
}

Eigen::MatrixXd ComputeLda(const ClassScatter &scatter, int lda_dim) {
  const Eigen::Index d = scatter.within.rows();
  if (lda_dim < 1 || lda_dim > d)
    throw UsageError("lda_dim " + std::to_string(lda_dim) + " out of range [1, " +
                     std::to_string(d) + "]");
  double reg = 1e-6 * scatter.within.trace() / static_cast<double>(d);
  if (!(reg > 0.0)) throw NumericError("LDA: within-class scatter is zero");
  Eigen::MatrixXd within = scatter.within + reg * Eigen::MatrixXd::Identity(d, d);
  GeneralizedEig eig = SolveGeneralizedEig(scatter.between, within, "LDA");
  return eig.vectors.leftCols(lda_dim).transpose();
}

Preprocessor FitPreprocessor(const EmbeddingSet &data, int lda_dim) {
  SpeakerIndex spk(data);
  int multi = 0;
  for (const auto &rows : spk.rows_of_speaker)
    if (rows.size() >= 2) ++multi;
  if (spk.NumSpeakers() < 2 || multi < 2)
    throw DataError("FitPreprocessor: need >= 2 speakers with >= 2 utterances each");
  const int max_dim = std::min(data.Dim(), spk.NumSpeakers() - 1);
  if (lda_dim < 1 || lda_dim > max_dim)
    throw UsageError("lda_dim " + std::to_string(lda_dim) + " out of range [1, " +
                     std::to_string(max_dim) + "]");

  Preprocessor p;
  ClassScatter raw = ComputeClassScatter(data.Matrix(), spk.of_row, spk.NumSpeakers());
  p.mean = raw.mean;
  p.lda = ComputeLda(raw, lda_dim);

  Eigen::MatrixXd normed(data.Size(), lda_dim);
  for (std::size_t i = 0; i < data.Size(); ++i) {
    if (spk.of_row[i] < 0) {
      normed.row(i).setZero();
      continue;
    }
    Eigen::VectorXd y = p.lda * (data.Row(i) - p.mean);
    normed.row(i) = LengthNormalize(y).transpose();
  }
  ClassScatter post = ComputeClassScatter(normed, spk.of_row, spk.NumSpeakers());
  p.norm_mean = post.mean;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> wes(post.within);
  double wmin = wes.eigenvalues().minCoeff(), wmax = wes.eigenvalues().maxCoeff();
  if (!(wmin > 1e-10 * std::max(wmax, 1e-300)))
    throw NumericError(
        "FitPreprocessor: within-class covariance is singular after LDA and length "
        "normalization (too little data for lda_dim=" + std::to_string(lda_dim) + ")");
  GeneralizedEig eig = SolveGeneralizedEig(post.between, post.within, "diagonalizing transform");
  p.diag_transform = eig.vectors.transpose();
  return p;
}

Eigen::VectorXd LengthNormalize(const Eigen::VectorXd &v) {
  double n = v.norm();
  if (!(n > kMinNorm))
    throw NumericError("length normalization of a degenerate (zero-norm) vector");
  return v / n;
}

Eigen::VectorXd ApplyPreprocessor(const Preprocessor &p, const Eigen::VectorXd &x) {
  if (x.size() != p.mean.size())
    throw DataError("ApplyPreprocessor: input dimension " + std::to_string(x.size()) +
                    " != " + std::to_string(p.mean.size()));
  Eigen::VectorXd y = p.lda * (x - p.mean);
  return p.diag_transform * (LengthNormalize(y) - p.norm_mean);
}

Eigen::MatrixXd ApplyPreprocessor(const Preprocessor &p, const Eigen::MatrixXd &rows) {
  Eigen::MatrixXd out(rows.rows(), p.LdaDim());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.row(i) = ApplyPreprocessor(p, Eigen::VectorXd(rows.row(i).transpose())).transpose();
  return out;
}

}  // namespace svb
