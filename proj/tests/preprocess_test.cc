// tests/preprocess_test.cc

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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "svb/error.h"
#include "svb/linalg.h"
#include "svb/preprocess.h"
#include "svb/synth.h"
#include "test_util.h"

namespace svb {
namespace {

EmbeddingSet MakeSet(const std::vector<Eigen::VectorXd> &rows, const std::vector<int> &speaker) {
  std::vector<std::string> ids, spks;
  std::vector<Gender> g;
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("u" + std::to_string(i));
    spks.push_back("s" + std::to_string(speaker[i]));
    g.push_back(Gender::kMale);
    m.row(i) = rows[i].transpose();
  }
  return EmbeddingSet(ids, spks, g, m);
}

/// Brute-force class covariances (1/N normalization) of the rows of `eta`.
void ClassCovariances(const Eigen::MatrixXd &eta, const std::vector<int> &spk, int s,
                      Eigen::MatrixXd *within, Eigen::MatrixXd *between) {
  const int d = static_cast<int>(eta.cols());
  const double n = static_cast<double>(eta.rows());
  Eigen::VectorXd mu = eta.colwise().mean().transpose();
  std::vector<Eigen::VectorXd> sums(s, Eigen::VectorXd::Zero(d));
  std::vector<double> counts(s, 0.0);
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    sums[spk[i]] += eta.row(i).transpose();
    counts[spk[i]] += 1.0;
  }
  *within = Eigen::MatrixXd::Zero(d, d);
  *between = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    Eigen::VectorXd dev = eta.row(i).transpose() - sums[spk[i]] / counts[spk[i]];
    *within += dev * dev.transpose() / n;
  }
  for (int k = 0; k < s; ++k) {
    Eigen::VectorXd dev = sums[k] / counts[k] - mu;
    *between += counts[k] * dev * dev.transpose() / n;
  }
}

TEST(LengthNormalize, Examples) {
  Eigen::Vector2d v(3, 4);
  EXPECT_TRUE(LengthNormalize(v).isApprox(Eigen::Vector2d(0.6, 0.8), 1e-15));
  Eigen::Vector3d unit(0, 1, 0);
  EXPECT_EQ(LengthNormalize(unit), Eigen::VectorXd(unit));
  EXPECT_THROW(LengthNormalize(Eigen::Vector2d(0, 0)), NumericError);
}

TEST(ApplyPreprocessor, IdentityChainIsLengthNormalization) {
  Preprocessor p = Preprocessor::Identity(2);
  EXPECT_TRUE(ApplyPreprocessor(p, Eigen::VectorXd(Eigen::Vector2d(3, 4)))
                  .isApprox(Eigen::Vector2d(0.6, 0.8), 1e-15));
  p.mean = Eigen::Vector2d(1, 1);
  EXPECT_THROW(ApplyPreprocessor(p, Eigen::VectorXd(Eigen::Vector2d(1, 1))), NumericError);
}

TEST(ApplyPreprocessor, MatchesStagewiseEvaluation) {
  std::mt19937_64 rng(11);
  Preprocessor p;
  p.mean = testing::RandomVector(6, rng);
  p.lda = testing::RandomMatrix(4, 6, rng);
  p.norm_mean = testing::RandomVector(4, rng) * 0.1;
  p.diag_transform = testing::RandomMatrix(4, 4, rng);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = testing::RandomVector(6, rng);
    Eigen::VectorXd centered = x - p.mean;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 6; ++j) y(i) += p.lda(i, j) * centered(j);
    double norm = std::sqrt(y.dot(y));
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) expected(i) += p.diag_transform(i, j) * (y(j) / norm - p.norm_mean(j));
    EXPECT_LT((ApplyPreprocessor(p, x) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lda, FixedPointIsSignedPermutation) {
  // Within-class scatter is exactly I and between-class is diag(a^2/2, b^2/2).
  const double a = 3.0, b = 2.0, r2 = std::sqrt(2.0);
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> spk;
  auto add = [&](double mx, double my, double ox, double oy, int s) {
    rows.push_back(Eigen::Vector2d(mx + ox, my + oy));
    rows.push_back(Eigen::Vector2d(mx - ox, my - oy));
    spk.insert(spk.end(), {s, s});
  };
  add(a, 0, 0, r2, 0);
  add(-a, 0, 0, r2, 1);
  add(0, b, r2, 0, 2);
  add(0, -b, r2, 0, 3);
  EmbeddingSet set = MakeSet(rows, spk);
  Preprocessor p = FitPreprocessor(set, 2);
  EXPECT_LT(p.mean.norm(), 1e-15);
  Eigen::MatrixXd abs = p.lda.cwiseAbs();
  EXPECT_LT((abs - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-5) << p.lda;
}

TEST(Lda, TwoSpeakersAlongFirstAxis) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<int> spk;
  for (int s = 0; s < 2; ++s) {
    double mx = s == 0 ? 1.0 : -1.0;
    for (auto [ox, oy] : {std::pair{0.2, 0.0}, {-0.2, 0.0}, {0.0, 0.5}, {0.0, -0.5}}) {
      rows.push_back(Eigen::Vector2d(mx + ox, oy));
      spk.push_back(s);
    }
  }
  EmbeddingSet set = MakeSet(rows, spk);
  SpeakerIndex index(set);
  Eigen::MatrixXd lda = ComputeLda(ComputeClassScatter(set.Matrix(), index.of_row, 2), 1);
  ASSERT_EQ(lda.rows(), 1);
  EXPECT_LT(std::abs(lda(0, 1)), 1e-12 * std::abs(lda(0, 0)));
  EXPECT_GT(lda(0, 0), 0.0);
}

TEST(FitPreprocessor, WhitensWithinAndDiagonalizesBetween) {
  SynthConfig cfg;
  cfg.n_speakers = 5;
  cfg.utts_per_speaker = 20;
  cfg.dim = 10;
  cfg.speaker_scale = 2.0;
  cfg.seed = 5;
  EmbeddingSet set = Generate(cfg).embeddings;
  Preprocessor p = FitPreprocessor(set, 4);
  ASSERT_EQ(p.LdaDim(), 4);
  ASSERT_TRUE(p.lda.allFinite());
  Eigen::MatrixXd eta = ApplyPreprocessor(p, set.Matrix());
  SpeakerIndex index(set);
  Eigen::MatrixXd within, between;
  ClassCovariances(eta, index.of_row, index.NumSpeakers(), &within, &between);
  EXPECT_LT((within - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-6) << within;
  Eigen::MatrixXd off = between;
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-6) << between;
  for (int k = 0; k + 1 < 4; ++k) EXPECT_GE(between(k, k), between(k + 1, k + 1));
  EXPECT_LT(eta.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitPreprocessor, RejectsBadRequests) {
  SynthConfig cfg;
  cfg.n_speakers = 3;
  cfg.utts_per_speaker = 5;
  cfg.dim = 4;
  EmbeddingSet set = Generate(cfg).embeddings;
  EXPECT_THROW(FitPreprocessor(set, 3), UsageError);  // > S - 1
  EXPECT_THROW(FitPreprocessor(set, 0), UsageError);
  EXPECT_EQ(DefaultLdaDim(512, 1000), 150);
  EXPECT_EQ(DefaultLdaDim(20, 1000), 20);
  EXPECT_EQ(DefaultLdaDim(20, 6), 5);
  std::vector<std::size_t> one_speaker{0, 1, 2, 3, 4};
  EXPECT_THROW(FitPreprocessor(set.Subset(one_speaker), 1), DataError);
}

TEST(Linalg, GeneralizedEigenSolution) {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd a = testing::RandomSpd(5, rng), b = testing::RandomSpd(5, rng);
  GeneralizedEig eig = SolveGeneralizedEig(a, b, "test");
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd v = eig.vectors.col(k);
    EXPECT_LT((a * v - eig.values(k) * b * v).norm(), 1e-10);
    EXPECT_NEAR(v.dot(b * v), 1.0, 1e-10);
    if (k > 0) {
      EXPECT_GE(eig.values(k - 1), eig.values(k));
    }
  }
}

TEST(Linalg, InverseAndLogDet) {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd s = testing::RandomSpd(4, rng);
  EXPECT_LT((InverseSpd(s, "s") * s - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-12);
  EXPECT_NEAR(LogDetSpd(s, "s"), std::log(s.determinant()), 1e-12);
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
  singular(0, 0) = 1.0;
  EXPECT_THROW(InverseSpd(singular, "s"), NumericError);
  Eigen::MatrixXd root = SqrtPsd(s);
  EXPECT_LT((root * root.transpose() - s).norm(), 1e-12);
}

}  // namespace
}  // namespace svb
