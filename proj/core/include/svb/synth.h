// core/include/svb/synth.h

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

#ifndef SVB_SYNTH_H_
#define SVB_SYNTH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "svb/data_model.h"

namespace svb {

/// A second, mismatched domain: its speakers are drawn from the same speaker
/// distribution, then offset by a fixed mean and observed with within-class
/// covariance inflated by `inflation`.
struct DomainShift {
  int n_speakers = 0;
  Eigen::VectorXd offset;  // D-vector mean offset
  double inflation = 1.0;
};

struct SynthConfig {
  int n_speakers = 0;        // base-domain speakers
  int utts_per_speaker = 0;
  int dim = 0;
  double speaker_scale = 1.0;  // scales the singular values of Phi
  double noise_scale = 1.0;    // within-class covariance is noise_scale^2 V diag(d) V^T
  std::optional<DomainShift> shift;
  std::uint64_t seed = 0;
  std::string id_prefix;       // prepended to every utterance and speaker id
};

/// The generating model.
struct SynthTruth {
  Eigen::MatrixXd phi;
  Eigen::MatrixXd sigma_wc;
  Eigen::VectorXd shift_offset;  // empty without a shifted domain
  double shift_inflation = 1.0;
};

struct SynthData {
  EmbeddingSet embeddings;
  SynthTruth truth;
};

/**
   Samples x = Phi omega + eps, omega ~ N(0, I), eps ~ N(0, Sigma_wc), for
   n_speakers x utts_per_speaker utterances, followed by the shifted-domain
   speakers when configured.  Phi is a random orthogonal matrix times a
   decaying diagonal spectrum.  Genders alternate M/F by speaker.  Ids are
   "<prefix>s<k>-u<j>" for base speakers and "<prefix>d<k>-u<j>" for shifted
   ones.  Deterministic given the seed; each partition draws from its own
   sub-seeded generator.
*/
SynthData Generate(const SynthConfig &config);

/// Random D-vector of Euclidean norm `norm`, deterministic given the seed.
Eigen::VectorXd RandomOffset(int dim, double norm, std::uint64_t seed);

/**
   log N([e; t]; 0, [[T, A], [A, T]]) - log N([e; t]; 0, [[T, 0], [0, T]])
   with A = Phi Phi^T, T = A + Sigma_wc, evaluated directly from the 2R x 2R
   joint covariances.  Throws NumericError if either is singular.
*/
double OracleLlr(const Eigen::MatrixXd &phi, const Eigen::MatrixXd &sigma_wc,
                 const Eigen::VectorXd &eta_e, const Eigen::VectorXd &eta_t);

struct BruteForceResult {
  double theta = 0.0;
  double cost = 0.0;
};

/// Evaluates P_miss + beta P_fa by direct counting at -inf, every midpoint of
/// adjacent distinct sorted scores and +inf; returns the first minimum.
BruteForceResult BruteForceMinCost(std::span<const double> scores,
                                   std::span<const int> labels, double beta);

}  // namespace svb

#endif  // SVB_SYNTH_H_
