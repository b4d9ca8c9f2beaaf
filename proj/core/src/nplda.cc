// core/src/nplda.cc

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

#include "svb/nplda.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "svb/error.h"
#include "svb/linalg.h"
#include "svb/metrics.h"

namespace svb {

Eigen::Index NpldaParams::Size() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + P.size() + Q.size() + 3;
}

Eigen::VectorXd NpldaParams::Pack() const {
  Eigen::VectorXd flat(Size());
  Eigen::Index k = 0;
  auto put = [&](const auto &m) {
    flat.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  put(w1);
  put(b1);
  put(w2);
  put(b2);
  put(P);
  put(Q);
  flat(k++) = c;
  flat(k++) = theta[0];
  flat(k++) = theta[1];
  return flat;
}

void NpldaParams::Unpack(const Eigen::VectorXd &flat) {
  if (flat.size() != Size()) throw DataError("NpldaParams::Unpack: size mismatch");
  Eigen::Index k = 0;
  auto get = [&](auto &m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(k, m.size());
    k += m.size();
  };
  get(w1);
  get(b1);
  get(w2);
  get(b2);
  get(P);
  get(Q);
  c = flat(k++);
  theta[0] = flat(k++);
  theta[1] = flat(k++);
}

bool NpldaParams::AllFinite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() &&
         P.allFinite() && Q.allFinite() && std::isfinite(c) && std::isfinite(theta[0]) &&
         std::isfinite(theta[1]);
}

NpldaModel InitFromGplda(const GpldaModel &model, double alpha, std::array<double, 2> beta) {
  if (!(alpha > 0.0)) throw UsageError("alpha must be > 0");
  if (!(beta[0] > 0.0) || !(beta[1] > 0.0)) throw UsageError("beta values must be > 0");
  const Preprocessor &pre = model.GetPreprocessor();
  NpldaModel out;
  out.alpha = alpha;
  out.beta = beta;
  NpldaParams &p = out.params;
  p.w1 = pre.lda;
  p.b1 = -(pre.lda * pre.mean);
  p.w2 = pre.diag_transform;
  p.b2 = -(pre.diag_transform * pre.norm_mean);
  p.P = Symmetrize(model.Scoring().P);
  p.Q = Symmetrize(model.Scoring().Q);
  p.c = model.Scoring().c;
  p.theta = {std::log(beta[0]), std::log(beta[1])};
  return out;
}

Eigen::VectorXd NpldaEmbed(const NpldaModel &model, const Eigen::VectorXd &x) {
  const NpldaParams &p = model.params;
  if (x.size() != p.w1.cols())
    throw DataError("NPLDA: input dimension " + std::to_string(x.size()) + " != " +
                    std::to_string(p.w1.cols()));
  Eigen::VectorXd u = p.w1 * x + p.b1;
  return p.w2 * LengthNormalize(u) + p.b2;
}

namespace {

// The cross term is averaged over both orders so that swapping the inputs
// gives a bit-identical score.
double PairScore(const NpldaParams &p, const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  return 0.5 * a.dot(p.Q * a) + 0.5 * b.dot(p.Q * b) +
         0.5 * (a.dot(p.P * b) + b.dot(p.P * a)) + p.c;
}

}  // namespace

double NpldaForward(const NpldaModel &model, const Eigen::VectorXd &x_e,
                    const Eigen::VectorXd &x_t) {
  const NpldaParams &p = model.params;
  Eigen::VectorXd a = NpldaEmbed(model, x_e);
  Eigen::VectorXd b = NpldaEmbed(model, x_t);
  return PairScore(p, a, b);
}

ScoreSet ScoreTrials(const NpldaModel &model, const EmbeddingSet &embeddings,
                     const TrialList &trials) {
  std::vector<Eigen::VectorXd> cache(embeddings.Size());
  std::vector<char> done(embeddings.Size(), 0);
  auto embed = [&](const std::string &id, std::size_t trial) -> const Eigen::VectorXd & {
    long row = embeddings.Find(id);
    if (row < 0)
      throw DataError("trial " + std::to_string(trial + 1) + ": unknown utterance id '" +
                      id + "'");
    if (!done[row]) {
      cache[row] = NpldaEmbed(model, embeddings.Row(row));
      done[row] = 1;
    }
    return cache[row];
  };
  const NpldaParams &p = model.params;
  ScoreSet out;
  out.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Eigen::VectorXd &a = embed(trials[i].enroll, i);
    const Eigen::VectorXd &b = embed(trials[i].test, i);
    double s = PairScore(p, a, b);
    out.push_back({trials[i].enroll, trials[i].test, s});
  }
  return out;
}

namespace {

struct ClassSizes {
  double targets = 0.0;
  double nontargets = 0.0;
};

template <typename Labels>
ClassSizes CountClasses(const Labels &labels, std::size_t n) {
  ClassSizes c;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels(i) == 1) c.targets += 1.0;
    else if (labels(i) == 0) c.nontargets += 1.0;
    else throw DataError("soft detection cost: labels must be 0 or 1");
  }
  if (c.targets == 0.0 || c.nontargets == 0.0)
    throw DataError("soft detection cost: batch must contain both targets and nontargets");
  return c;
}

}  // namespace

double SoftDetectionCost(std::span<const double> scores, std::span<const int> labels,
                         double alpha, double beta, double theta) {
  if (scores.size() != labels.size())
    throw DataError("SoftDetectionCost: scores and labels differ in length");
  ClassSizes n = CountClasses([&](std::size_t i) { return labels[i]; }, labels.size());
  double miss = 0.0, fa = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) miss += Sigmoid(-alpha * (scores[i] - theta));
    else fa += Sigmoid(alpha * (scores[i] - theta));
  }
  return miss / n.targets + beta * (fa / n.nontargets);
}

std::vector<IndexedTrial> IndexTrials(const EmbeddingSet &embeddings, const TrialList &trials) {
  std::vector<int> t = TargetIndicators(trials);
  std::vector<IndexedTrial> out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    long e = embeddings.Find(trials[i].enroll), s = embeddings.Find(trials[i].test);
    if (e < 0 || s < 0)
      throw DataError("trial " + std::to_string(i + 1) + ": unknown utterance id '" +
                      (e < 0 ? trials[i].enroll : trials[i].test) + "'");
    out[i] = {static_cast<std::size_t>(e), static_cast<std::size_t>(s), t[i]};
  }
  return out;
}

namespace {

/// Forward pass of a batch, keeping the intermediates needed by backprop.
/// Columns index trials.
struct BatchForward {
  Eigen::MatrixXd x_e, x_t;     // D x B
  Eigen::MatrixXd v_e, v_t;     // R x B, unit columns
  Eigen::VectorXd norm_e, norm_t;
  Eigen::MatrixXd a, b;         // R x B
  Eigen::VectorXd scores;       // B
};

BatchForward Forward(const NpldaModel &model, const Eigen::MatrixXd &rows,
                     std::span<const IndexedTrial> batch) {
  const NpldaParams &p = model.params;
  const Eigen::Index bsz = static_cast<Eigen::Index>(batch.size());
  if (rows.cols() != p.w1.cols())
    throw DataError("NPLDA: embedding dimension " + std::to_string(rows.cols()) + " != " +
                    std::to_string(p.w1.cols()));
  BatchForward f;
  f.x_e.resize(rows.cols(), bsz);
  f.x_t.resize(rows.cols(), bsz);
  for (Eigen::Index i = 0; i < bsz; ++i) {
    f.x_e.col(i) = rows.row(batch[i].enroll).transpose();
    f.x_t.col(i) = rows.row(batch[i].test).transpose();
  }
  auto side = [&](const Eigen::MatrixXd &x, Eigen::MatrixXd &v, Eigen::VectorXd &norm,
                  Eigen::MatrixXd &out) {
    v = (p.w1 * x).colwise() + p.b1;
    norm = v.colwise().norm().transpose();
    if (bsz > 0 && !(norm.minCoeff() > kMinNorm))
      throw NumericError("NPLDA: zero-norm intermediate (degenerate input)");
    v = v * norm.cwiseInverse().asDiagonal();
    out = (p.w2 * v).colwise() + p.b2;
  };
  side(f.x_e, f.v_e, f.norm_e, f.a);
  side(f.x_t, f.v_t, f.norm_t, f.b);
  Eigen::MatrixXd qa = p.Q * f.a, qb = p.Q * f.b, pa = p.P * f.a, pb = p.P * f.b;
  f.scores = (0.5 * (f.a.array() * qa.array()).colwise().sum() +
              0.5 * (f.b.array() * qb.array()).colwise().sum() +
              0.5 * ((f.a.array() * pb.array()).colwise().sum() +
                     (f.b.array() * pa.array()).colwise().sum()))
                 .transpose()
                 .matrix();
  f.scores.array() += p.c;
  return f;
}

/// Loss of the two-operating-point soft cost and (optionally) dL/ds and
/// dL/dtheta.
double SoftLoss(const NpldaModel &model, const Eigen::VectorXd &scores,
                std::span<const IndexedTrial> batch, Eigen::VectorXd *d_scores,
                std::array<double, 2> *d_theta) {
  ClassSizes n = CountClasses([&](std::size_t i) { return batch[i].target; }, batch.size());
  const double alpha = model.alpha;
  double loss = 0.0;
  if (d_scores) d_scores->setZero(scores.size());
  if (d_theta) *d_theta = {0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    const double beta = model.beta[k], theta = model.params.theta[k];
    double miss = 0.0, fa = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      double z = alpha * (scores(i) - theta);
      double sig = Sigmoid(z);
      // d sigma(z) / dz computed from both tails to stay accurate when saturated.
      double dsig = Sigmoid(z) * Sigmoid(-z);
      double w;
      if (batch[i].target == 1) {
        miss += Sigmoid(-z);
        w = -1.0 / n.targets;
      } else {
        fa += sig;
        w = beta / n.nontargets;
      }
      double g = 0.5 * w * dsig * alpha;
      if (d_scores) (*d_scores)(i) += g;
      if (d_theta) (*d_theta)[k] -= g;
    }
    loss += 0.5 * (miss / n.targets + beta * (fa / n.nontargets));
  }
  return loss;
}

}  // namespace

Eigen::VectorXd NpldaBatchScores(const NpldaModel &model, const Eigen::MatrixXd &rows,
                                 std::span<const IndexedTrial> batch) {
  return Forward(model, rows, batch).scores;
}

double NpldaLoss(const NpldaModel &model, const Eigen::MatrixXd &rows,
                 std::span<const IndexedTrial> batch) {
  BatchForward f = Forward(model, rows, batch);
  return SoftLoss(model, f.scores, batch, nullptr, nullptr);
}

LossAndGradient NpldaLossGradients(const NpldaModel &model, const Eigen::MatrixXd &rows,
                                   std::span<const IndexedTrial> batch) {
  const NpldaParams &p = model.params;
  BatchForward f = Forward(model, rows, batch);
  Eigen::VectorXd g;
  std::array<double, 2> g_theta;
  LossAndGradient out;
  out.loss = SoftLoss(model, f.scores, batch, &g, &g_theta);

  NpldaParams &d = out.grad;
  const auto gd = g.asDiagonal();
  // Quadratic layer.
  d.Q = 0.5 * (f.a * gd * f.a.transpose() + f.b * gd * f.b.transpose());
  d.P = 0.5 * (f.a * gd * f.b.transpose() + f.b * gd * f.a.transpose());
  d.c = g.sum();
  d.theta = g_theta;

  const Eigen::MatrixXd q_sym = Symmetrize(p.Q);
  const Eigen::MatrixXd p_sym = Symmetrize(p.P);
  Eigen::MatrixXd g_a = (q_sym * f.a + p_sym * f.b) * gd;
  Eigen::MatrixXd g_b = (q_sym * f.b + p_sym * f.a) * gd;

  // affine2
  d.w2 = g_a * f.v_e.transpose() + g_b * f.v_t.transpose();
  d.b2 = g_a.rowwise().sum() + g_b.rowwise().sum();

  // Length norm: d(u/|u|)/du = (I - v v^T) / |u|.
  auto through_norm = [&](const Eigen::MatrixXd &g_out, const Eigen::MatrixXd &v,
                          const Eigen::VectorXd &norm) {
    Eigen::MatrixXd g_v = p.w2.transpose() * g_out;
    Eigen::RowVectorXd proj = (v.array() * g_v.array()).colwise().sum();
    Eigen::MatrixXd g_u = g_v - v * proj.asDiagonal();
    return Eigen::MatrixXd(g_u * norm.cwiseInverse().asDiagonal());
  };
  Eigen::MatrixXd g_ue = through_norm(g_a, f.v_e, f.norm_e);
  Eigen::MatrixXd g_ut = through_norm(g_b, f.v_t, f.norm_t);

  // affine1
  d.w1 = g_ue * f.x_e.transpose() + g_ut * f.x_t.transpose();
  d.b1 = g_ue.rowwise().sum() + g_ut.rowwise().sum();
  return out;
}

std::vector<std::vector<std::size_t>> ComposeBatches(std::span<const int> labels,
                                                     std::size_t batch_size,
                                                     std::mt19937_64 &rng) {
  if (batch_size == 0) throw UsageError("batch_size must be >= 1");
  std::vector<std::size_t> tgt, non;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? tgt : non).push_back(i);
  if (tgt.empty() || non.empty())
    throw DataError("NPLDA training needs both target and nontarget trials");
  std::shuffle(tgt.begin(), tgt.end(), rng);
  std::shuffle(non.begin(), non.end(), rng);
  std::size_t nb = (labels.size() + batch_size - 1) / batch_size;
  nb = std::min({nb, tgt.size(), non.size()});
  std::vector<std::vector<std::size_t>> batches(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    auto deal = [&](const std::vector<std::size_t> &src) {
      std::size_t lo = b * src.size() / nb, hi = (b + 1) * src.size() / nb;
      batches[b].insert(batches[b].end(), src.begin() + lo, src.begin() + hi);
    };
    deal(tgt);
    deal(non);
  }
  return batches;
}

namespace {

double ValidationCMin(const NpldaModel &model, const Eigen::MatrixXd &rows,
                      const std::vector<IndexedTrial> &valid) {
  Eigen::VectorXd s = NpldaBatchScores(model, rows, valid);
  std::vector<int> labels(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) labels[i] = valid[i].target;
  return CMin(std::span<const double>(s.data(), s.size()), labels, model.beta).c_min;
}

}  // namespace

NpldaTrainResult TrainNplda(const NpldaModel &init, const EmbeddingSet &embeddings,
                            const TrialList &train, const NpldaTrainConfig &config,
                            const TrialList *valid) {
  if (config.epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(config.learning_rate >= 0.0)) throw UsageError("learning rate must be >= 0");
  if (embeddings.Dim() != init.Dim())
    throw DataError("TrainNplda: embeddings have dimension " +
                    std::to_string(embeddings.Dim()) + ", model expects " +
                    std::to_string(init.Dim()));
  const std::vector<IndexedTrial> trials = IndexTrials(embeddings, train);
  std::vector<IndexedTrial> valid_trials;
  if (valid) valid_trials = IndexTrials(embeddings, *valid);
  std::vector<int> labels(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) labels[i] = trials[i].target;
  const Eigen::MatrixXd &rows = embeddings.Matrix();

  NpldaTrainResult result;
  NpldaModel model = init;
  NpldaModel best = init;
  double best_cmin = std::numeric_limits<double>::infinity();

  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(model.params.Size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(model.params.Size());
  double bias1 = 1.0, bias2 = 1.0;
  std::mt19937_64 rng(config.seed);
  std::vector<IndexedTrial> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto batches = ComposeBatches(labels, config.batch_size, rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      batch.clear();
      for (std::size_t i : batches[bi]) batch.push_back(trials[i]);
      LossAndGradient lg = NpldaLossGradients(model, rows, batch);
      if (!std::isfinite(lg.loss) || !lg.grad.AllFinite())
        throw NumericError("NPLDA training: non-finite loss or gradient at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(bi + 1));
      result.loss_trace.push_back(lg.loss);

      Eigen::VectorXd grad = lg.grad.Pack();
      m1 = config.adam_beta1 * m1 + (1.0 - config.adam_beta1) * grad;
      m2 = config.adam_beta2 * m2 + (1.0 - config.adam_beta2) * grad.cwiseAbs2();
      bias1 *= config.adam_beta1;
      bias2 *= config.adam_beta2;
      Eigen::VectorXd step = (m1 / (1.0 - bias1)).array() /
                             ((m2 / (1.0 - bias2)).cwiseSqrt().array() + config.adam_eps);
      Eigen::VectorXd flat = model.params.Pack();
      flat -= config.learning_rate * step;
      model.params.Unpack(flat);
      model.params.P = Symmetrize(model.params.P);
      model.params.Q = Symmetrize(model.params.Q);
      if (!model.params.AllFinite())
        throw NumericError("NPLDA training: parameters became non-finite at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(bi + 1) +
                           " (learning rate too large?)");
    }
    if (valid) {
      double cmin = ValidationCMin(model, rows, valid_trials);
      result.valid_cmin.push_back(cmin);
      if (cmin < best_cmin) {
        best_cmin = cmin;
        best = model;
        result.best_epoch = epoch;
      }
    }
  }
  result.model = (valid && result.best_epoch > 0) ? best : model;
  return result;
}

}  // namespace svb
