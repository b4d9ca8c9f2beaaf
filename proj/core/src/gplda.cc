// core/src/gplda.cc

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

#include "svb/gplda.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "svb/error.h"
#include "svb/linalg.h"

namespace svb {

ScoringParams ComputeScoringParams(const Eigen::MatrixXd &phi,
                                   const Eigen::MatrixXd &sigma_wc) {
  if (phi.rows() != phi.cols() || sigma_wc.rows() != phi.rows() ||
      sigma_wc.cols() != phi.rows())
    throw DataError("ComputeScoringParams: Phi and Sigma_wc must be square and equal size");
  const Eigen::MatrixXd ac = phi * phi.transpose();
  const Eigen::MatrixXd tot = ac + sigma_wc;
  const Eigen::MatrixXd tot_inv = InverseSpd(tot, "Sigma_tot");
  const Eigen::MatrixXd s = Symmetrize(tot - ac * tot_inv * ac);
  const Eigen::MatrixXd s_inv = InverseSpd(s, "Sigma_tot - Sigma_ac Sigma_tot^-1 Sigma_ac");
  ScoringParams out;
  out.Q = tot_inv - s_inv;
  out.P = tot_inv * ac * s_inv;
  // det [[T, A], [A, T]] = det(T) det(S) by the Schur complement.
  out.c = 0.5 * (LogDetSpd(tot, "Sigma_tot") - LogDetSpd(s, "Schur complement"));
  return out;
}

double ScorePreprocessed(const ScoringParams &params, const Eigen::VectorXd &eta_e,
                         const Eigen::VectorXd &eta_t) {
  if (eta_e.size() != params.Q.rows() || eta_t.size() != params.Q.rows())
    throw DataError("ScorePreprocessed: dimension mismatch");
  return 0.5 * eta_e.dot(params.Q * eta_e) + 0.5 * eta_t.dot(params.Q * eta_t) +
         eta_e.dot(params.P * eta_t) + params.c;
}

GpldaModel::GpldaModel(Preprocessor preprocessor, Eigen::MatrixXd phi,
                       Eigen::MatrixXd sigma_wc)
    : preprocessor_(std::move(preprocessor)),
      phi_(std::move(phi)),
      sigma_wc_(std::move(sigma_wc)) {
  const Eigen::Index r = preprocessor_.LdaDim();
  if (phi_.rows() != r || phi_.cols() != r || sigma_wc_.rows() != r || sigma_wc_.cols() != r)
    throw DataError("GpldaModel: Phi/Sigma_wc must be " + std::to_string(r) + "x" +
                    std::to_string(r));
  if (preprocessor_.lda.cols() != preprocessor_.mean.size() ||
      preprocessor_.norm_mean.size() != r || preprocessor_.diag_transform.rows() != r ||
      preprocessor_.diag_transform.cols() != r)
    throw DataError("GpldaModel: inconsistent preprocessor shapes");
  if (!phi_.allFinite() || !sigma_wc_.allFinite())
    throw NumericError("GpldaModel: non-finite parameters");
  LogDetSpd(sigma_wc_, "Sigma_wc");
  sigma_ac_ = phi_ * phi_.transpose();
  sigma_tot_ = sigma_ac_ + sigma_wc_;
  scoring_ = ComputeScoringParams(phi_, sigma_wc_);
}

namespace {

struct SpeakerStats {
  std::vector<double> count;
  Eigen::MatrixXd mean;  // S x R
  double n_total = 0.0;
  Eigen::MatrixXd scatter;  // sum_r eta_r eta_r^T
};

SpeakerStats GatherStats(const Eigen::MatrixXd &eta, const std::vector<int> &speaker_of_row,
                         int num_speakers) {
  const Eigen::Index r = eta.cols();
  SpeakerStats st;
  st.count.assign(num_speakers, 0.0);
  st.mean = Eigen::MatrixXd::Zero(num_speakers, r);
  st.scatter = Eigen::MatrixXd::Zero(r, r);
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    int s = speaker_of_row[i];
    if (s < 0) continue;
    st.count[s] += 1.0;
    st.mean.row(s) += eta.row(i);
    st.scatter.noalias() += eta.row(i).transpose() * eta.row(i);
    st.n_total += 1.0;
  }
  for (int s = 0; s < num_speakers; ++s)
    if (st.count[s] > 0) st.mean.row(s) /= st.count[s];
  return st;
}

}  // namespace

double PldaLogLikelihood(const Eigen::MatrixXd &eta, const std::vector<int> &speaker_of_row,
                         int num_speakers, const PldaParams &params) {
  const Eigen::Index r = eta.cols();
  const Eigen::MatrixXd ac = params.phi * params.phi.transpose();
  const Eigen::MatrixXd w_inv = InverseSpd(params.sigma_wc, "Sigma_wc");
  const double logdet_w = LogDetSpd(params.sigma_wc, "Sigma_wc");
  SpeakerStats st = GatherStats(eta, speaker_of_row, num_speakers);

  // Per-utterance-count cache of (W + nA)^-1 and its log det.
  std::map<double, std::pair<Eigen::MatrixXd, double>> by_count;
  double quad = (w_inv.array() * st.scatter.array()).sum();
  double ll = -0.5 * quad;
  for (int s = 0; s < num_speakers; ++s) {
    double n = st.count[s];
    if (n == 0) continue;
    auto it = by_count.find(n);
    if (it == by_count.end()) {
      Eigen::MatrixXd m = params.sigma_wc + n * ac;
      it = by_count.emplace(n, std::make_pair(InverseSpd(m, "Sigma_wc + n Sigma_ac"),
                                              LogDetSpd(m, "Sigma_wc + n Sigma_ac")))
               .first;
    }
    Eigen::VectorXd mu = st.mean.row(s).transpose();
    ll -= 0.5 * (n * static_cast<double>(r) * std::log(2.0 * std::numbers::pi) +
                 (n - 1.0) * logdet_w + it->second.second -
                 n * mu.dot(w_inv * mu) + n * mu.dot(it->second.first * mu));
  }
  return ll;
}

PldaParams FitPlda(const Eigen::MatrixXd &eta, const std::vector<int> &speaker_of_row,
                   int num_speakers, int em_iters, std::vector<double> *loglik_trace) {
  if (em_iters < 0) throw UsageError("em_iters must be >= 0");
  if (static_cast<Eigen::Index>(speaker_of_row.size()) != eta.rows())
    throw DataError("FitPlda: speaker labels do not match rows");
  SpeakerStats st = GatherStats(eta, speaker_of_row, num_speakers);
  int present = 0, multi = 0;
  for (double c : st.count) {
    if (c > 0) ++present;
    if (c >= 2) ++multi;
  }
  if (present < 2 || multi < 1)
    throw DataError(
        "FitPlda: need >= 2 speakers (and repeated utterances) to estimate the "
        "between-class covariance");

  const Eigen::Index r = eta.cols();
  ClassScatter init = ComputeClassScatter(eta, speaker_of_row, num_speakers);
  Eigen::MatrixXd ac = init.between;
  Eigen::MatrixXd wc = init.within;
  LogDetSpd(wc, "initial Sigma_wc");

  auto record = [&]() {
    if (loglik_trace)
      loglik_trace->push_back(
          PldaLogLikelihood(eta, speaker_of_row, num_speakers, {SqrtPsd(ac), wc}));
  };
  record();

  const double n_spk = static_cast<double>(present);
  for (int iter = 0; iter < em_iters; ++iter) {
    // Posterior of the speaker mean y ~ N(0, A) given the average of n
    // observations ybar ~ N(y, W / n):
    //   C = A - A (A + W/n)^-1 A,   m = A (A + W/n)^-1 ybar.
    std::map<double, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> by_count;
    Eigen::MatrixXd ac_acc = Eigen::MatrixXd::Zero(r, r);
    Eigen::MatrixXd wc_acc = st.scatter;
    for (int s = 0; s < num_speakers; ++s) {
      double n = st.count[s];
      if (n == 0) continue;
      auto it = by_count.find(n);
      if (it == by_count.end()) {
        Eigen::MatrixXd gain = ac * InverseSpd(ac + wc / n, "Sigma_ac + Sigma_wc / n");
        Eigen::MatrixXd cov = Symmetrize(ac - gain * ac);
        it = by_count.emplace(n, std::make_pair(gain, cov)).first;
      }
      const auto &[gain, cov] = it->second;
      Eigen::VectorXd ybar = st.mean.row(s).transpose();
      Eigen::VectorXd m = gain * ybar;
      ac_acc.noalias() += m * m.transpose() + cov;
      wc_acc.noalias() += n * (m * m.transpose() + cov - ybar * m.transpose() -
                               m * ybar.transpose());
    }
    ac = Symmetrize(ac_acc / n_spk);
    wc = Symmetrize(wc_acc / st.n_total);
    if (!wc.allFinite() || !ac.allFinite())
      throw NumericError("FitPlda: non-finite covariance at EM iteration " +
                         std::to_string(iter + 1));
    try {
      LogDetSpd(wc, "Sigma_wc");
    } catch (const NumericError &) {
      throw NumericError("FitPlda: Sigma_wc became singular at EM iteration " +
                         std::to_string(iter + 1) + " (degenerate data)");
    }
    record();
  }
  return {SqrtPsd(ac), wc};
}

GpldaModel FitGplda(const EmbeddingSet &data, const GpldaConfig &config,
                    std::vector<double> *loglik_trace) {
  SpeakerIndex spk(data);
  int lda_dim = config.lda_dim > 0 ? config.lda_dim
                                   : DefaultLdaDim(data.Dim(), spk.NumSpeakers());
  Preprocessor pre = FitPreprocessor(data, lda_dim);

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.Size(); ++i)
    if (spk.of_row[i] >= 0) rows.push_back(i);
  Eigen::MatrixXd eta(rows.size(), lda_dim);
  std::vector<int> labels(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    eta.row(k) = ApplyPreprocessor(pre, data.Row(rows[k])).transpose();
    labels[k] = spk.of_row[rows[k]];
  }
  PldaParams plda = FitPlda(eta, labels, spk.NumSpeakers(), config.em_iters, loglik_trace);
  return GpldaModel(std::move(pre), std::move(plda.phi), std::move(plda.sigma_wc));
}

double ScoreTrial(const GpldaModel &model, const Eigen::VectorXd &x_e,
                  const Eigen::VectorXd &x_t) {
  return ScorePreprocessed(model.Scoring(), model.Embed(x_e), model.Embed(x_t));
}

ScoreSet ScoreTrials(const GpldaModel &model, const EmbeddingSet &embeddings,
                     const TrialList &trials) {
  std::vector<std::optional<Eigen::VectorXd>> cache(embeddings.Size());
  auto embed = [&](const std::string &id, std::size_t trial) -> const Eigen::VectorXd & {
    long row = embeddings.Find(id);
    if (row < 0)
      throw DataError("trial " + std::to_string(trial + 1) + ": unknown utterance id '" +
                      id + "'");
    auto &slot = cache[row];
    if (!slot) slot = model.Embed(embeddings.Row(row));
    return *slot;
  };
  ScoreSet out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto &t = trials[i];
    const Eigen::VectorXd &a = embed(t.enroll, i);
    const Eigen::VectorXd &b = embed(t.test, i);
    out.push_back({t.enroll, t.test, ScorePreprocessed(model.Scoring(), a, b)});
  }
  return out;
}

EmbeddingSet AddEnrollmentModels(const EmbeddingSet &embeddings, const EnrollmentMap &map) {
  std::vector<std::string> ids;
  for (const auto &[id, utts] : map) ids.push_back(id);
  std::sort(ids.begin(), ids.end());

  std::vector<std::string> u, s;
  std::vector<Gender> g;
  Eigen::MatrixXd m(ids.size(), embeddings.Dim());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto &utts = map.at(ids[k]);
    if (utts.empty()) throw DataError("enrollment model '" + ids[k] + "' has no utterances");
    if (embeddings.Find(ids[k]) >= 0)
      throw DataError("enrollment model id '" + ids[k] + "' collides with an utterance id");
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(embeddings.Dim());
    std::string speaker;
    for (std::size_t j = 0; j < utts.size(); ++j) {
      std::size_t row = embeddings.IndexOf(utts[j]);
      acc += embeddings.Row(row);
      if (j == 0) speaker = embeddings.Speakers()[row];
      else if (speaker != embeddings.Speakers()[row]) speaker = kUnlabeledSpeaker;
    }
    u.push_back(ids[k]);
    s.push_back(speaker);
    g.push_back(embeddings.Genders()[embeddings.IndexOf(utts.front())]);
    m.row(k) = (acc / static_cast<double>(utts.size())).transpose();
  }
  return Concatenate(embeddings, EmbeddingSet(std::move(u), std::move(s), std::move(g),
                                              std::move(m)));
}

EnrollmentMap LoadEnrollmentMap(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  EnrollmentMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string id, utt;
    if (!(ls >> id)) continue;
    std::vector<std::string> utts;
    while (ls >> utt) utts.push_back(utt);
    if (utts.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": model without utterances");
    if (!map.emplace(id, std::move(utts)).second)
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate model '" + id + "'");
  }
  return map;
}

}  // namespace svb
