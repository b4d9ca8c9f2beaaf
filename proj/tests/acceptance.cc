// tests/acceptance.cc

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

// Acceptance harness: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "svb/gplda.h"
#include "svb/metrics.h"
#include "svb/nplda.h"
#include "svb/postproc.h"
#include "svb/preprocess.h"
#include "svb/synth.h"
#include "svb/trials.h"
#include "test_util.h"

namespace svb {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char *fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

int failures = 0;

void Report(int id, double limit_s, const std::function<Outcome()> &body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail += Format(" [over the %.0f s budget]", limit_s);
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s  (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------
// Mismatched-domain benchmark shared by criteria 6 to 9.

constexpr int kDim = 20;
constexpr double kSpeakerScale = 5.0;
constexpr int kUtts = 12;
constexpr int kBaseSpeakers = 500;
constexpr int kShiftTrain = 100;
constexpr int kShiftHeldOut = 100;
constexpr int kShiftDev = 50;
constexpr double kShiftNorm = 2.0;
constexpr double kShiftInflation = 3.0;
constexpr std::size_t kTrainTrials = 100000;
constexpr std::size_t kHeldOutTrials = 50000;
constexpr std::size_t kDevTrials = 20000;

struct Benchmark {
  EmbeddingSet all, train, held_out, dev;
  GpldaModel gplda;
  TrialList train_trials, held_trials, dev_trials;
  std::vector<int> held_labels, dev_labels;
};

std::vector<std::size_t> Range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> r(end - begin);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = begin + i;
  return r;
}

/// Base domain plus shifted speakers split into training, held-out and
/// development groups.  GPLDA is trained on the pooled training speakers.
Benchmark MakeBenchmark(std::uint64_t seed) {
  SynthConfig c;
  c.n_speakers = kBaseSpeakers;
  c.utts_per_speaker = kUtts;
  c.dim = kDim;
  c.speaker_scale = kSpeakerScale;
  c.seed = seed;
  c.shift = DomainShift{kShiftTrain + kShiftHeldOut + kShiftDev,
                        RandomOffset(kDim, kShiftNorm, seed), kShiftInflation};
  Benchmark b;
  b.all = Generate(c).embeddings;
  const std::size_t base = kBaseSpeakers * kUtts, shift_train = kShiftTrain * kUtts,
                    held = kShiftHeldOut * kUtts, dev = kShiftDev * kUtts;
  b.train = b.all.Subset(Range(0, base + shift_train));
  b.held_out = b.all.Subset(Range(base + shift_train, base + shift_train + held));
  b.dev = b.all.Subset(Range(base + shift_train + held, base + shift_train + held + dev));
  b.gplda = FitGplda(b.train, {});
  b.train_trials = SampleTrials(b.train, {kTrainTrials, 0.1, seed * 11, false});
  b.held_trials = SampleTrials(b.held_out, {kHeldOutTrials, 0.1, seed * 13, false});
  b.dev_trials = SampleTrials(b.dev, {kDevTrials, 0.1, seed * 17, false});
  b.held_labels = TargetIndicators(b.held_trials);
  b.dev_labels = TargetIndicators(b.dev_trials);
  return b;
}

NpldaModel TrainBenchmarkNplda(const Benchmark &b, std::uint64_t seed, double alpha) {
  NpldaTrainConfig cfg;  // defaults: Adam, lr 5e-4, batch 4096, 20 epochs
  cfg.seed = seed;
  return TrainNplda(InitFromGplda(b.gplda, alpha), b.train, b.train_trials, cfg).model;
}

template <typename Model>
std::vector<double> Scores(const Model &m, const EmbeddingSet &set, const TrialList &trials) {
  return ScoreValues(ScoreTrials(m, set, trials));
}

// Seed 1 artifacts reused by criteria 7 to 9.
Benchmark seed1;
NpldaModel seed1_nplda;

// ---------------------------------------------------------------------------

Outcome ScoringOracle() {
  std::mt19937_64 rng(101);
  const int dims[] = {1, 5, 20};
  double worst = 0.0;
  for (int m = 0; m < 10; ++m) {
    const int r = dims[m % 3];
    Eigen::MatrixXd phi = testing::RandomMatrix(r, r, rng);
    Eigen::MatrixXd wc = testing::RandomSpd(r, rng);
    GpldaModel model(Preprocessor::Identity(r), phi, wc);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd e = testing::RandomVector(r, rng), x = testing::RandomVector(r, rng);
      double s = ScoreTrial(model, e, x);
      double o = OracleLlr(phi, wc, ApplyPreprocessor(model.GetPreprocessor(), e),
                           ApplyPreprocessor(model.GetPreprocessor(), x));
      worst = std::max(worst, std::abs(s - o));
    }
  }
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  ScoringParams p = ComputeScoringParams(one, one);
  double closed = std::max({std::abs(p.Q(0, 0) + 1.0 / 6.0), std::abs(p.P(0, 0) - 1.0 / 3.0),
                            std::abs(p.c - 0.5 * std::log(4.0 / 3.0))});
  return {worst < 1e-8 && closed < 1e-12,
          Format("max |score - oracle| = %.2e over 1000 trials; 1-D closed form error %.1e", worst,
                 closed)};
}

Outcome InitEquivalence() {
  SynthConfig c;
  c.n_speakers = 200;
  c.utts_per_speaker = 8;
  c.dim = 20;
  c.speaker_scale = 3.0;
  c.seed = 202;
  EmbeddingSet data = Generate(c).embeddings;
  GpldaModel g = FitGplda(data, {});
  NpldaModel n = InitFromGplda(g);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, data.Size() - 1);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd e = data.Row(pick(rng)), x = data.Row(pick(rng));
    worst = std::max(worst, std::abs(NpldaForward(n, e, x) - ScoreTrial(g, e, x)));
  }
  return {worst < 1e-10, Format("max |NPLDA - GPLDA| = %.2e over 1000 trials", worst)};
}

Outcome GradientCheck() {
  SynthConfig c;
  c.n_speakers = 60;
  c.utts_per_speaker = 6;
  c.dim = 10;
  c.speaker_scale = 2.0;
  c.seed = 303;
  EmbeddingSet data = Generate(c).embeddings;
  GpldaModel g = FitGplda(data, {});
  std::vector<IndexedTrial> all = IndexTrials(data, SampleTrials(data, {640, 0.25, 3, false}));
  std::mt19937_64 rng(4);
  const char *names[] = {"w1", "b1", "w2", "b2", "P", "Q", "c", "theta"};
  double worst = 0.0;
  std::string worst_group;
  for (int batch_id = 0; batch_id < 10; ++batch_id) {
    std::vector<IndexedTrial> batch(all.begin() + 64 * batch_id, all.begin() + 64 * (batch_id + 1));
    NpldaModel m = InitFromGplda(g);
    Eigen::VectorXd flat = m.params.Pack();
    flat += 0.05 * testing::RandomVector(static_cast<int>(flat.size()), rng);
    m.params.Unpack(flat);
    // Thresholds inside the score range keep every gradient informative.
    Eigen::VectorXd s = NpldaBatchScores(m, data.Matrix(), batch);
    std::vector<double> sorted(s.data(), s.data() + s.size());
    std::sort(sorted.begin(), sorted.end());
    m.params.theta = {sorted[32], sorted[48]};

    Eigen::VectorXd analytic = NpldaLossGradients(m, data.Matrix(), batch).grad.Pack();
    Eigen::VectorXd numeric(analytic.size());
    const double h = 1e-5;
    Eigen::VectorXd base = m.params.Pack();
    NpldaModel probe = m;
    for (Eigen::Index k = 0; k < base.size(); ++k) {
      Eigen::VectorXd plus = base, minus = base;
      plus(k) += h;
      minus(k) -= h;
      probe.params.Unpack(plus);
      double fp = NpldaLoss(probe, data.Matrix(), batch);
      probe.params.Unpack(minus);
      double fm = NpldaLoss(probe, data.Matrix(), batch);
      numeric(k) = (fp - fm) / (2 * h);
    }
    const NpldaParams &p = m.params;
    const Eigen::Index sizes[] = {p.w1.size(), p.b1.size(), p.w2.size(), p.b2.size(),
                                  p.P.size(),  p.Q.size(),  1,           2};
    Eigen::Index off = 0;
    for (int gi = 0; gi < 8; ++gi) {
      Eigen::VectorXd a = analytic.segment(off, sizes[gi]), n = numeric.segment(off, sizes[gi]);
      double rel = (a - n).norm() / std::max({a.norm(), n.norm(), 1e-300});
      if (rel > worst) {
        worst = rel;
        worst_group = names[gi];
      }
      off += sizes[gi];
    }
  }
  return {worst < 1e-5, Format("max group relative error %.2e (%s) over 10 batches of 64",
                               worst, worst_group.c_str())};
}

double NaiveEer(const std::vector<double> &s, const std::vector<int> &t) {
  std::vector<double> u = s;
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> thetas{-std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j + 1 < u.size(); ++j) thetas.push_back(std::midpoint(u[j], u[j + 1]));
  thetas.push_back(std::numeric_limits<double>::infinity());
  double nt = std::count(t.begin(), t.end(), 1), nn = t.size() - nt;
  double prev_fa = 1.0, prev_miss = 0.0;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    double miss = 0, fa = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (t[i] && s[i] < thetas[k]) ++miss;
      if (!t[i] && s[i] >= thetas[k]) ++fa;
    }
    miss /= nt;
    fa /= nn;
    if (fa - miss <= 0) {
      if (k == 0) return miss;
      double d0 = prev_fa - prev_miss, d1 = fa - miss;
      return prev_miss + d0 / (d0 - d1) * (miss - prev_miss);
    }
    prev_fa = fa;
    prev_miss = miss;
  }
  return 1.0;
}

Outcome MetricOracle() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> log_size(std::log(10.0), std::log(10000.0));
  int mismatches = 0;
  std::size_t largest = 0;
  for (int k = 0; k < 100; ++k) {
    std::size_t n = k == 0 ? 10 : k == 1 ? 10000 : std::lround(std::exp(log_size(rng)));
    largest = std::max(largest, n);
    std::vector<double> s;
    std::vector<int> t;
    testing::RandomScores(n, rng, &s, &t, 0.5 + 0.03 * k);
    if (k % 3 == 0)
      for (double &v : s) v = std::round(v * 8.0) / 8.0;  // force ties
    double brute_sum = 0.0;
    CMinResult cm = CMin(s, t);
    for (int op = 0; op < 2; ++op) {
      BruteForceResult b = BruteForceMinCost(s, t, kDefaultBetas[op]);
      brute_sum += b.cost;
      if (b.cost != cm.costs[op] || b.theta != cm.thresholds[op]) ++mismatches;
    }
    if (brute_sum / 2 != cm.c_min) ++mismatches;
    if (Eer(s, t) != NaiveEer(s, t)) ++mismatches;
    double nt = std::count(t.begin(), t.end(), 1), nn = n - nt;
    for (double theta : {s[0], s[n / 2], 0.0, 1.3}) {
      double miss = 0, fa = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (t[i] && s[i] < theta) ++miss;
        if (!t[i] && s[i] >= theta) ++fa;
      }
      ErrorRates r = HardRates(s, t, theta);
      if (r.p_miss != miss / nt || r.p_fa != fa / nn) ++mismatches;
    }
  }
  return {mismatches == 0,
          Format("%d mismatches over 100 score sets (sizes 10..%zu)", mismatches, largest)};
}

Outcome SoftToHard() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (int set = 0; set < 10; ++set) {
    std::vector<double> s;
    std::vector<int> t;
    testing::RandomScores(1000, rng, &s, &t, 3.0);
    for (double theta : {-1.0, 0.0, std::log(99.0), std::log(199.0)}) {
      std::vector<double> shifted = s;
      for (double &v : shifted)
        if (std::abs(v - theta) < 1e-2) v = theta + (v < theta ? -1e-2 : 1e-2);
      for (double beta : {1.0, 99.0, 199.0})
        worst = std::max(worst, std::abs(SoftDetectionCost(shifted, t, 1e4, beta, theta) -
                                         CNorm(shifted, t, beta, theta)));
    }
  }
  return {worst < 1e-6, Format("max |soft - hard| = %.2e at alpha = 1e4", worst)};
}

Outcome DomainShiftDirection() {
  double sum_rel = 0.0;
  bool all_no_worse = true;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Benchmark b = MakeBenchmark(seed);
    NpldaModel n = TrainBenchmarkNplda(b, seed, kDefaultAlpha);
    double g = CMin(Scores(b.gplda, b.held_out, b.held_trials), b.held_labels).c_min;
    double nc = CMin(Scores(n, b.held_out, b.held_trials), b.held_labels).c_min;
    sum_rel += (g - nc) / g;
    all_no_worse = all_no_worse && nc <= g;
    per_seed += Format(" %.4f/%.4f", g, nc);
    if (seed == 1) {
      seed1 = std::move(b);
      seed1_nplda = std::move(n);
    }
  }
  double mean_rel = sum_rel / 5;
  return {all_no_worse && mean_rel >= 0.03,
          Format("GPLDA/NPLDA c_min per seed:%s; mean relative improvement %+.2f%% (need >= 3%%)",
                 per_seed.c_str(), 100 * mean_rel)};
}

void AlphaSensitivity() {
  // Informational: held-out c_min of NPLDA for a few warping factors on the
  // seed 1 benchmark.
  std::string line;
  for (double alpha : {5.0, 15.0, 30.0}) {
    NpldaModel n = alpha == kDefaultAlpha ? seed1_nplda : TrainBenchmarkNplda(seed1, 1, alpha);
    line += Format(" alpha=%g:%.4f", alpha,
                   CMin(Scores(n, seed1.held_out, seed1.held_trials), seed1.held_labels).c_min);
  }
  std::printf("info: alpha sensitivity (seed 1 held-out c_min):%s\n", line.c_str());
}

Outcome CalibrationClaim() {
  auto distort = [](std::vector<double> s) {
    for (double &v : s) v = 3.0 * v + 2.0;
    return s;
  };
  std::vector<double> dev = distort(Scores(seed1.gplda, seed1.dev, seed1.dev_trials));
  std::vector<double> held = distort(Scores(seed1.gplda, seed1.held_out, seed1.held_trials));
  AffineCalibration cal = FitCalibration(dev, seed1.dev_labels, {});
  std::vector<double> calibrated = ApplyCalibration(held, cal);
  double cmin_raw = CMin(held, seed1.held_labels).c_min;
  double cmin_cal = CMin(calibrated, seed1.held_labels).c_min;
  double act_raw = CPrimaryActual(held, seed1.held_labels);
  double act_cal = CPrimaryActual(calibrated, seed1.held_labels);
  bool ok = cmin_cal == cmin_raw && act_cal <= 1.15 * cmin_cal;
  return {ok, Format("c_primary %.4f -> %.4f after calibration, c_min %.4f (unchanged: %s); "
                     "ratio %.3f (need <= 1.15)",
                     act_raw, act_cal, cmin_cal, cmin_cal == cmin_raw ? "yes" : "no",
                     act_cal / cmin_cal)};
}

Outcome AsNormClaim() {
  // Hand example.
  ScoreSet lines{{"e", "c0", 1}, {"e", "c1", 3}, {"e", "c2", -5},
                 {"t", "c0", 0}, {"t", "c1", 2}, {"t", "c2", -4}};
  CohortScores hand = MakeCohortScores(lines, {"c0", "c1", "c2"});
  double hand_score = AsNorm({{"e", "t", 5.0}}, hand, 2)[0].score;
  bool hand_ok = std::abs(hand_score - 2.474874) < 1e-6;

  // Shifted-domain cohort: the shifted training speakers.
  const std::size_t base_rows = kBaseSpeakers * kUtts;
  EmbeddingSet cohort_set = seed1.train.Subset(Range(base_rows, seed1.train.Size()));
  std::vector<std::string> cohort_ids = cohort_set.UttIds();
  EmbeddingSet joint = Concatenate(seed1.held_out, cohort_set);
  TrialList cohort_trials;
  for (const std::string &id : seed1.held_out.UttIds())
    for (const std::string &c : cohort_ids) cohort_trials.push_back({id, c});
  CohortScores cohort =
      MakeCohortScores(ScoreTrials(seed1.gplda, joint, cohort_trials), cohort_ids);
  ScoreSet raw = ScoreTrials(seed1.gplda, seed1.held_out, seed1.held_trials);
  ScoreSet norm = AsNorm(raw, cohort, DefaultTopK(cohort.CohortSize()));
  double c_raw = CMin(ScoreValues(raw), seed1.held_labels).c_min;
  double c_norm = CMin(ScoreValues(norm), seed1.held_labels).c_min;
  return {hand_ok && c_norm <= c_raw + 0.01,
          Format("hand example %.6f; held-out c_min raw %.4f, AS-Norm %.4f (cohort %zu, top-k %zu)",
                 hand_score, c_raw, c_norm, cohort.CohortSize(), DefaultTopK(cohort.CohortSize()))};
}

Outcome FusionClaim() {
  std::vector<double> g_dev = Scores(seed1.gplda, seed1.dev, seed1.dev_trials);
  std::vector<double> n_dev = Scores(seed1_nplda, seed1.dev, seed1.dev_trials);
  AffineCalibration cal = FitCalibration(g_dev, seed1.dev_labels, {});
  Eigen::MatrixXd one = Eigen::Map<const Eigen::RowVectorXd>(g_dev.data(), g_dev.size());
  FusionModel f1 = FitFusion(one, seed1.dev_labels, {});
  double collapse = std::max(std::abs(f1.weights(0) - cal.a), std::abs(f1.bias - cal.b));

  Eigen::MatrixXd dev(2, g_dev.size());
  dev.row(0) = one;
  dev.row(1) = Eigen::Map<const Eigen::RowVectorXd>(n_dev.data(), n_dev.size());
  FusionModel f2 = FitFusion(dev, seed1.dev_labels, {});
  std::vector<double> g_held = Scores(seed1.gplda, seed1.held_out, seed1.held_trials);
  std::vector<double> n_held = Scores(seed1_nplda, seed1.held_out, seed1.held_trials);
  Eigen::MatrixXd held(2, g_held.size());
  held.row(0) = Eigen::Map<const Eigen::RowVectorXd>(g_held.data(), g_held.size());
  held.row(1) = Eigen::Map<const Eigen::RowVectorXd>(n_held.data(), n_held.size());
  Eigen::VectorXd fused = ApplyFusion(held, f2);
  double cg = CMin(g_held, seed1.held_labels).c_min;
  double cn = CMin(n_held, seed1.held_labels).c_min;
  double cf = CMin(std::vector<double>(fused.data(), fused.data() + fused.size()),
                   seed1.held_labels)
                  .c_min;
  return {collapse < 1e-8 && cf <= std::min(cg, cn) + 0.01,
          Format("K=1 vs calibration max diff %.1e; held-out c_min GPLDA %.4f, NPLDA %.4f, "
                 "fused %.4f",
                 collapse, cg, cn, cf)};
}

Outcome Reproducibility() {
  auto pipeline = [](const testing::TempDir &d) {
    std::vector<std::vector<std::string>> steps{
        {"synth", "--out", d.File("emb.xvb"), "--format", "binary", "--truth", d.File("truth.mdl"),
         "--speakers", "120", "--utts", "8", "--dim", "12", "--speaker-scale", "4",
         "--shift-speakers", "30", "--shift-norm", "2", "--shift-inflation", "2", "--seed", "9"},
        {"train-plda", "--embeddings", d.File("emb.xvb"), "--format", "binary", "--out",
         d.File("g.mdl")},
        {"sample-trials", "--embeddings", d.File("emb.xvb"), "--format", "binary", "--n-trials",
         "20000", "--seed", "9", "--out", d.File("trials")},
        {"train-nplda", "--embeddings", d.File("emb.xvb"), "--format", "binary", "--trials",
         d.File("trials"), "--model", d.File("g.mdl"), "--epochs", "3", "--seed", "9", "--out",
         d.File("n.mdl")},
        {"score", "--model", d.File("g.mdl"), "--embeddings", d.File("emb.xvb"), "--format",
         "binary", "--trials", d.File("trials"), "--out", d.File("g.scores")},
        {"score", "--model", d.File("n.mdl"), "--embeddings", d.File("emb.xvb"), "--format",
         "binary", "--trials", d.File("trials"), "--out", d.File("n.scores")},
    };
    for (auto args : steps) {
      args.insert(args.begin(), "svb");
      std::ostringstream out, err;
      if (Run(args, out, err) != kExitOk) throw std::runtime_error(args[1] + ": " + err.str());
    }
  };
  testing::TempDir a("accept"), b("accept");
  pipeline(a);
  pipeline(b);
  std::string differ;
  for (const char *f : {"emb.xvb", "truth.mdl", "g.mdl", "trials", "n.mdl", "g.scores", "n.scores"})
    if (testing::ReadBytes(a.File(f)) != testing::ReadBytes(b.File(f))) differ += std::string(" ") + f;
  return {differ.empty(), differ.empty() ? "two runs byte-identical (embeddings, models, trials, scores)"
                                         : "differing files:" + differ};
}

}  // namespace
}  // namespace svb

int main() {
  using namespace svb;
  Report(1, 10, ScoringOracle);
  Report(2, 5, InitEquivalence);
  Report(3, 60, GradientCheck);
  Report(4, 30, MetricOracle);
  Report(5, 5, SoftToHard);
  Report(6, 600, DomainShiftDirection);
  AlphaSensitivity();
  Report(7, 120, CalibrationClaim);
  Report(8, 120, AsNormClaim);
  Report(9, 120, FusionClaim);
  Report(10, 0, Reproducibility);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
