// core/src/synth.cc

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

#include "svb/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "svb/error.h"

namespace svb {

namespace {

std::mt19937_64 SubGenerator(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd Gaussian(int rows, int cols, std::mt19937_64 &rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

/// Haar-distributed orthogonal matrix.
Eigen::MatrixXd RandomOrthogonal(int d, std::mt19937_64 &rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Gaussian(d, d, rng));
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR();
  for (int k = 0; k < d; ++k)
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  return q;
}

std::string Id(const std::string &prefix, char domain, int speaker, int utt) {
  char buf[48];
  if (utt < 0)
    std::snprintf(buf, sizeof(buf), "%c%05d", domain, speaker);
  else
    std::snprintf(buf, sizeof(buf), "%c%05d-u%03d", domain, speaker, utt);
  return prefix + buf;
}

/// Lower Cholesky factor; `what` names the matrix in the error.
Eigen::MatrixXd CholeskyFactor(const Eigen::MatrixXd &m, const char *what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + " is not positive definite");
  return llt.matrixL();
}

}  // namespace

Eigen::VectorXd RandomOffset(int dim, double norm, std::uint64_t seed) {
  if (dim < 1) throw UsageError("RandomOffset: dim must be >= 1");
  std::mt19937_64 rng = SubGenerator(seed, 7);
  Eigen::VectorXd v = Gaussian(dim, 1, rng);
  return norm * v / v.norm();
}

SynthData Generate(const SynthConfig &config) {
  if (config.n_speakers < 1 || config.utts_per_speaker < 1 || config.dim < 1)
    throw UsageError("synth: n_speakers, utts_per_speaker and dim must be >= 1");
  if (!(config.speaker_scale >= 0.0) || !(config.noise_scale > 0.0))
    throw UsageError("synth: speaker_scale must be >= 0 and noise_scale > 0");
  const int d = config.dim;
  if (config.shift) {
    if (config.shift->n_speakers < 1) throw UsageError("synth: shifted domain needs >= 1 speaker");
    if (config.shift->offset.size() != d)
      throw UsageError("synth: domain offset must have dimension " + std::to_string(d));
    if (!(config.shift->inflation > 0.0))
      throw UsageError("synth: covariance inflation must be > 0");
  }

  SynthTruth truth;
  {
    std::mt19937_64 rng = SubGenerator(config.seed, 0);
    Eigen::VectorXd spectrum(d);
    for (int k = 0; k < d; ++k)
      spectrum(k) = config.speaker_scale * std::pow(0.25, d > 1 ? double(k) / (d - 1) : 0.0);
    truth.phi = RandomOrthogonal(d, rng) * spectrum.asDiagonal();
    Eigen::MatrixXd v = RandomOrthogonal(d, rng);
    std::uniform_real_distribution<double> spread(0.5, 1.5);
    Eigen::VectorXd diag(d);
    for (int k = 0; k < d; ++k) diag(k) = spread(rng);
    truth.sigma_wc = config.noise_scale * config.noise_scale * v * diag.asDiagonal() * v.transpose();
    truth.sigma_wc = 0.5 * (truth.sigma_wc + truth.sigma_wc.transpose()).eval();
  }

  const int n_base = config.n_speakers;
  const int n_shift = config.shift ? config.shift->n_speakers : 0;
  const int per = config.utts_per_speaker;
  const std::size_t total = static_cast<std::size_t>(n_base + n_shift) * per;
  std::vector<std::string> ids, speakers;
  std::vector<Gender> genders;
  ids.reserve(total);
  speakers.reserve(total);
  genders.reserve(total);
  Eigen::MatrixXd x(total, d);

  auto sample_partition = [&](int first_speaker, int count, char domain, std::uint64_t stream,
                              const Eigen::VectorXd *offset, double inflation) {
    std::mt19937_64 rng = SubGenerator(config.seed, stream);
    Eigen::MatrixXd noise_chol = CholeskyFactor(inflation * truth.sigma_wc, "within-class covariance");
    for (int k = 0; k < count; ++k) {
      const int global = first_speaker + k;
      Eigen::VectorXd center = truth.phi * Gaussian(d, 1, rng);
      if (offset) center += *offset;
      Gender g = global % 2 == 0 ? Gender::kMale : Gender::kFemale;
      for (int j = 0; j < per; ++j) {
        const std::size_t row = ids.size();
        x.row(row) = (center + noise_chol * Gaussian(d, 1, rng)).transpose();
        ids.push_back(Id(config.id_prefix, domain, k, j));
        speakers.push_back(Id(config.id_prefix, domain, k, -1));
        genders.push_back(g);
      }
    }
  };
  sample_partition(0, n_base, 's', 1, nullptr, 1.0);
  if (config.shift) {
    truth.shift_offset = config.shift->offset;
    truth.shift_inflation = config.shift->inflation;
    sample_partition(n_base, n_shift, 'd', 2, &config.shift->offset, config.shift->inflation);
  }
  return {EmbeddingSet(std::move(ids), std::move(speakers), std::move(genders), std::move(x)),
          std::move(truth)};
}

double OracleLlr(const Eigen::MatrixXd &phi, const Eigen::MatrixXd &sigma_wc,
                 const Eigen::VectorXd &eta_e, const Eigen::VectorXd &eta_t) {
  const Eigen::Index r = sigma_wc.rows();
  if (phi.rows() != r || sigma_wc.cols() != r || eta_e.size() != r || eta_t.size() != r)
    throw DataError("OracleLlr: inconsistent dimensions");
  const Eigen::MatrixXd a = phi * phi.transpose();
  const Eigen::MatrixXd t = a + sigma_wc;
  Eigen::MatrixXd same(2 * r, 2 * r), diff = Eigen::MatrixXd::Zero(2 * r, 2 * r);
  same << t, a, a, t;
  diff.topLeftCorner(r, r) = t;
  diff.bottomRightCorner(r, r) = t;
  Eigen::VectorXd z(2 * r);
  z << eta_e, eta_t;

  auto log_density = [&](const Eigen::MatrixXd &cov, const char *what) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericError(std::string("OracleLlr: ") + what + " covariance is singular");
    Eigen::VectorXd w = llt.matrixL().solve(z);
    double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(2 * r) * std::log(2.0 * std::numbers::pi) + logdet +
                   w.squaredNorm());
  };
  return log_density(same, "same-speaker") - log_density(diff, "different-speaker");
}

BruteForceResult BruteForceMinCost(std::span<const double> scores,
                                   std::span<const int> labels, double beta) {
  if (scores.size() != labels.size()) throw DataError("BruteForceMinCost: length mismatch");
  std::size_t n_t = 0, n_n = 0;
  for (int t : labels) (t == 1 ? n_t : n_n)++;
  if (n_t == 0 || n_n == 0) throw DataError("BruteForceMinCost: both classes are required");

  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> candidates{-inf};
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k)
    candidates.push_back(std::midpoint(sorted[k], sorted[k + 1]));
  candidates.push_back(inf);

  BruteForceResult best{0.0, inf};
  for (double theta : candidates) {
    std::size_t misses = 0, fas = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      bool accept = scores[i] >= theta;
      if (labels[i] == 1 && !accept) ++misses;
      if (labels[i] != 1 && accept) ++fas;
    }
    double cost = static_cast<double>(misses) / static_cast<double>(n_t) +
                  beta * (static_cast<double>(fas) / static_cast<double>(n_n));
    if (cost < best.cost) best = {theta, cost};
  }
  return best;
}

}  // namespace svb
