// core/src/postproc.cc

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

#include "svb/postproc.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "svb/error.h"
#include "svb/linalg.h"

namespace svb {

// ---------------------------------------------------------------------------
// AS-Norm

CohortScores MakeCohortScores(const ScoreSet &lines, std::vector<std::string> cohort_ids) {
  if (cohort_ids.size() < 2) throw DataError("cohort must contain at least 2 utterances");
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t k = 0; k < cohort_ids.size(); ++k)
    if (!position.emplace(cohort_ids[k], k).second)
      throw DataError("duplicate cohort id '" + cohort_ids[k] + "'");

  CohortScores out;
  std::unordered_map<std::string, std::vector<char>> filled;
  for (const auto &l : lines) {
    auto pos = position.find(l.test);
    if (pos == position.end())
      throw DataError("cohort score for undeclared cohort id '" + l.test + "'");
    auto [it, inserted] = out.by_id.try_emplace(l.enroll, cohort_ids.size(), 0.0);
    auto &mask = filled[l.enroll];
    if (inserted) mask.assign(cohort_ids.size(), 0);
    if (mask[pos->second])
      throw DataError("duplicate cohort score (" + l.enroll + ", " + l.test + ")");
    mask[pos->second] = 1;
    it->second[pos->second] = l.score;
  }
  for (const auto &[id, mask] : filled) {
    auto missing = std::find(mask.begin(), mask.end(), 0);
    if (missing != mask.end())
      throw DataError("'" + id + "' has no score against cohort id '" +
                      cohort_ids[missing - mask.begin()] + "'");
  }
  out.cohort_ids = std::move(cohort_ids);
  return out;
}

std::vector<std::string> LoadIdList(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string id;
    if (ls >> id) ids.push_back(id);
  }
  return ids;
}

std::size_t DefaultTopK(std::size_t cohort_size) { return std::min<std::size_t>(200, cohort_size); }

namespace {

struct CohortStats {
  double mean = 0.0;
  double sd = 1.0;
};

CohortStats TopKStats(const std::string &id, const CohortScores &cohort, std::size_t top_k) {
  auto it = cohort.by_id.find(id);
  if (it == cohort.by_id.end()) throw DataError("AS-Norm: no cohort scores for '" + id + "'");
  const std::vector<double> &v = it->second;
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + top_k, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (v[a] != v[b]) return v[a] > v[b];
                      return cohort.cohort_ids[a] < cohort.cohort_ids[b];
                    });
  double mean = 0.0;
  for (std::size_t k = 0; k < top_k; ++k) mean += v[order[k]];
  mean /= static_cast<double>(top_k);
  double ss = 0.0;
  for (std::size_t k = 0; k < top_k; ++k) ss += (v[order[k]] - mean) * (v[order[k]] - mean);
  double sd = std::sqrt(ss / static_cast<double>(top_k - 1));
  if (!(sd >= 1e-12))
    throw NumericError("AS-Norm: degenerate cohort for '" + id +
                       "' (top-k cohort scores are constant)");
  return {mean, sd};
}

}  // namespace

ScoreSet AsNorm(const ScoreSet &raw, const CohortScores &cohort, std::size_t top_k) {
  if (top_k < 2 || top_k > cohort.CohortSize())
    throw UsageError("AS-Norm: top_k must be in [2, " + std::to_string(cohort.CohortSize()) +
                     "]");
  std::unordered_map<std::string, CohortStats> cache;
  auto stats = [&](const std::string &id) -> const CohortStats & {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, TopKStats(id, cohort, top_k)).first;
    return it->second;
  };
  ScoreSet out;
  out.reserve(raw.size());
  for (const auto &s : raw) {
    const CohortStats &e = stats(s.enroll);
    const CohortStats &t = stats(s.test);
    double v = 0.5 * ((s.score - e.mean) / e.sd + (s.score - t.mean) / t.sd);
    out.push_back({s.enroll, s.test, v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

double DefaultEffectivePrior(std::span<const double> betas) {
  double sum = 0.0;
  for (double b : betas) sum += 1.0 / (1.0 + b);
  return sum / static_cast<double>(betas.size());
}

namespace {

/**
   Prior-weighted logistic regression on features (K x N) with an optional
   fixed offset added to the linear score.  Parameters are (w_1..w_K, bias).
*/
class WeightedLogistic {
 public:
  WeightedLogistic(const Eigen::MatrixXd &features, std::span<const int> labels,
                   const Eigen::VectorXd &offset, const LogisticConfig &config)
      : x_(features), offset_(offset), config_(config), weight_(labels.size()),
        sign_(labels.size()) {
    if (!(config.effective_prior > 0.0 && config.effective_prior < 1.0))
      throw UsageError("effective prior must be in (0, 1)");
    if (!(config.l2 >= 0.0)) throw UsageError("l2 must be >= 0");
    if (static_cast<std::size_t>(features.cols()) != labels.size())
      throw DataError("logistic regression: scores and labels differ in length");
    double nt = 0, nn = 0;
    for (int t : labels) {
      if (t == 1) ++nt;
      else if (t == 0) ++nn;
      else throw DataError("logistic regression: labels must be 0 or 1");
    }
    if (nt == 0 || nn == 0)
      throw DataError("logistic regression: both target and nontarget trials are required");
    const double pi = config.effective_prior;
    logit_ = std::log(pi / (1.0 - pi));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      weight_(i) = labels[i] == 1 ? pi / nt : (1.0 - pi) / nn;
      sign_(i) = labels[i] == 1 ? 1.0 : -1.0;
    }
  }

  Eigen::Index Dim() const { return x_.rows() + 1; }

  Eigen::VectorXd Linear(const Eigen::VectorXd &theta) const {
    const Eigen::Index k = x_.rows();
    Eigen::VectorXd z = x_.transpose() * theta.head(k);
    z.array() += theta(k) + logit_;
    if (offset_.size() > 0) z += offset_;
    return z;
  }

  double Objective(const Eigen::VectorXd &theta) const {
    Eigen::VectorXd z = Linear(theta);
    double f = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) f += weight_(i) * Softplus(-sign_(i) * z(i));
    const auto w = theta.head(x_.rows());
    return f + config_.l2 * w.squaredNorm();
  }

  void GradientHessian(const Eigen::VectorXd &theta, Eigen::VectorXd *g,
                       Eigen::MatrixXd *h) const {
    const Eigen::Index k = x_.rows();
    Eigen::VectorXd z = Linear(theta);
    Eigen::VectorXd dz(z.size()), curv(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      // d/dz softplus(-y z) = -y sigmoid(-y z)
      dz(i) = -sign_(i) * weight_(i) * Sigmoid(-sign_(i) * z(i));
      curv(i) = weight_(i) * Sigmoid(z(i)) * Sigmoid(-z(i));
    }
    g->resize(k + 1);
    g->head(k) = x_ * dz + 2.0 * config_.l2 * theta.head(k);
    (*g)(k) = dz.sum();
    h->resize(k + 1, k + 1);
    h->topLeftCorner(k, k) = x_ * curv.asDiagonal() * x_.transpose();
    h->topLeftCorner(k, k).diagonal().array() += 2.0 * config_.l2;
    h->topRightCorner(k, 1) = x_ * curv;
    h->bottomLeftCorner(1, k) = h->topRightCorner(k, 1).transpose();
    (*h)(k, k) = curv.sum();
  }

  Eigen::VectorXd Solve(SolverTrace *trace) const {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(Dim());
    double f = Objective(theta);
    if (trace) trace->objective.push_back(f);
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    for (int iter = 0;; ++iter) {
      GradientHessian(theta, &g, &h);
      const double gnorm = g.norm();
      if (trace) {
        trace->final_gradient_norm = gnorm;
        trace->iterations = iter;
      }
      if (gnorm < config_.tolerance) return theta;
      if (iter >= config_.max_iters)
        throw NumericError("logistic regression did not converge in " +
                           std::to_string(config_.max_iters) +
                           " iterations (gradient norm " + std::to_string(gnorm) + ")");
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13) || !ldlt.isPositive())
        throw NumericError(
            "logistic regression: singular Hessian (duplicated or constant systems; "
            "use l2 > 0)");
      Eigen::VectorXd step = ldlt.solve(g);
      // Backtracking line search keeps the objective monotone.
      double t = 1.0;
      Eigen::VectorXd next;
      double f_next;
      for (;;) {
        next = theta - t * step;
        f_next = Objective(next);
        if (f_next <= f - 1e-4 * t * g.dot(step) || t < 1e-10) break;
        t *= 0.5;
      }
      if (!(f_next <= f)) {
        // No further decrease is representable: accept if the gradient is small.
        if (gnorm < 1e-6) return theta;
        throw NumericError("logistic regression: line search failed (gradient norm " +
                           std::to_string(gnorm) + ")");
      }
      const bool tiny_step = (next - theta).norm() <= 1e-14 * (1.0 + theta.norm());
      theta = next;
      f = f_next;
      if (trace) trace->objective.push_back(f);
      if (tiny_step && gnorm < 1e-6) {
        if (trace) trace->final_gradient_norm = gnorm;
        return theta;
      }
    }
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd offset_;
  LogisticConfig config_;
  Eigen::VectorXd weight_;
  Eigen::VectorXd sign_;
  double logit_ = 0.0;
};

constexpr double kMinScale = 1e-9;

}  // namespace

AffineCalibration FitCalibration(std::span<const double> scores, std::span<const int> labels,
                                 const LogisticConfig &config, SolverTrace *trace) {
  Eigen::MatrixXd x = Eigen::Map<const Eigen::RowVectorXd>(scores.data(), scores.size());
  Eigen::VectorXd theta = WeightedLogistic(x, labels, Eigen::VectorXd(), config).Solve(trace);
  if (theta(0) >= kMinScale) return {theta(0), theta(1)};
  // The optimum violates a > 0: the constrained optimum lies on a = kMinScale.
  if (trace) *trace = SolverTrace();
  Eigen::VectorXd offset = kMinScale * x.row(0).transpose();
  Eigen::VectorXd b = WeightedLogistic(Eigen::MatrixXd(0, x.cols()), labels, offset, config)
                          .Solve(trace);
  return {kMinScale, b(0)};
}

std::vector<double> ApplyCalibration(std::span<const double> scores,
                                     const AffineCalibration &cal) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = cal.a * scores[i] + cal.b;
  return out;
}

ScoreSet ApplyCalibration(const ScoreSet &scores, const AffineCalibration &cal) {
  ScoreSet out = scores;
  for (auto &s : out) s.score = cal.a * s.score + cal.b;
  return out;
}

AffineCalibration FitShiftCalibration(std::span<const double> scores,
                                      std::span<const int> labels,
                                      std::span<const double> betas) {
  if (scores.size() != labels.size())
    throw DataError("shift calibration: scores and labels differ in length");
  double sum[2] = {0, 0}, sq[2] = {0, 0}, n[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int c = labels[i] == 1 ? 1 : 0;
    sum[c] += scores[i];
    n[c] += 1.0;
  }
  if (n[0] < 2 || n[1] < 2)
    throw DataError("shift calibration: need >= 2 trials of each class");
  double mean[2] = {sum[0] / n[0], sum[1] / n[1]};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    int c = labels[i] == 1 ? 1 : 0;
    sq[c] += (scores[i] - mean[c]) * (scores[i] - mean[c]);
  }
  double pooled = (sq[0] + sq[1]) / (n[0] + n[1] - 2.0);
  if (!(pooled > 1e-24)) throw NumericError("shift calibration: zero within-class variance");
  AffineCalibration cal{1.0 / std::sqrt(pooled), 0.0};
  std::vector<double> scaled = ApplyCalibration(scores, cal);
  CMinResult cm = CMin(scaled, labels, betas);
  double shift = 0.0;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    if (!std::isfinite(cm.thresholds[k]))
      throw NumericError("shift calibration: minimum-cost threshold is infinite");
    shift += std::log(betas[k]) - cm.thresholds[k];
  }
  cal.b = shift / static_cast<double>(betas.size());
  return cal;
}

FusionModel FitFusion(const Eigen::MatrixXd &score_matrix, std::span<const int> labels,
                      const LogisticConfig &config, SolverTrace *trace) {
  if (score_matrix.rows() < 1) throw UsageError("fusion needs at least one system");
  Eigen::VectorXd theta =
      WeightedLogistic(score_matrix, labels, Eigen::VectorXd(), config).Solve(trace);
  FusionModel m;
  m.weights = theta.head(score_matrix.rows());
  m.bias = theta(score_matrix.rows());
  return m;
}

Eigen::VectorXd ApplyFusion(const Eigen::MatrixXd &score_matrix, const FusionModel &model) {
  if (score_matrix.rows() != model.weights.size())
    throw DataError("fusion: model has " + std::to_string(model.weights.size()) +
                    " weights but " + std::to_string(score_matrix.rows()) +
                    " systems were given");
  Eigen::VectorXd out = score_matrix.transpose() * model.weights;
  out.array() += model.bias;
  return out;
}

namespace {

std::map<std::string, double> LoadKeyValues(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  std::map<std::string, double> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    char *end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || !std::isfinite(v))
      throw DataError(path + ":" + std::to_string(line_no) + ": bad value '" + value + "'");
    kv[key] = v;
  }
  return kv;
}

void WriteKeyValues(const std::vector<std::pair<std::string, double>> &kv,
                    const std::string &path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  char buf[64];
  for (const auto &[k, v] : kv) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << k << '=' << buf << '\n';
  }
  if (!os) throw DataError("error writing '" + path + "'");
}

}  // namespace

void WriteCalibration(const AffineCalibration &cal, const std::string &path) {
  WriteKeyValues({{"a", cal.a}, {"b", cal.b}}, path);
}

AffineCalibration LoadCalibration(const std::string &path) {
  auto kv = LoadKeyValues(path);
  if (!kv.count("a") || !kv.count("b")) throw DataError(path + ": needs a= and b=");
  if (!(kv["a"] > 0.0)) throw DataError(path + ": calibration scale a must be > 0");
  return {kv["a"], kv["b"]};
}

void WriteFusion(const FusionModel &model, const std::string &path) {
  std::vector<std::pair<std::string, double>> kv;
  for (Eigen::Index k = 0; k < model.weights.size(); ++k)
    kv.emplace_back("w" + std::to_string(k + 1), model.weights(k));
  kv.emplace_back("bias", model.bias);
  WriteKeyValues(kv, path);
}

FusionModel LoadFusion(const std::string &path) {
  auto kv = LoadKeyValues(path);
  FusionModel m;
  std::vector<double> w;
  for (std::size_t k = 1;; ++k) {
    auto it = kv.find("w" + std::to_string(k));
    if (it == kv.end()) break;
    w.push_back(it->second);
  }
  if (w.empty() || !kv.count("bias")) throw DataError(path + ": needs w1=... and bias=");
  m.weights = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  m.bias = kv["bias"];
  return m;
}

}  // namespace svb
