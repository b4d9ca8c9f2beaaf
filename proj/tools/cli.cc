// tools/cli.cc

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

#include "cli.h"

#include <cstdio>
#include <memory>
#include <ostream>
#include <unordered_set>
#include <variant>

#include "CLI11.hpp"
#include "plot.h"
#include "svb/data_model.h"
#include "svb/error.h"
#include "svb/gplda.h"
#include "svb/metrics.h"
#include "svb/model_io.h"
#include "svb/nplda.h"
#include "svb/postproc.h"
#include "svb/synth.h"
#include "svb/trials.h"

namespace svb {

namespace {

struct Streams {
  std::ostream &out;
  std::ostream &err;
};

std::vector<double> DefaultBetaVector() { return {kDefaultBetas.begin(), kDefaultBetas.end()}; }

void CheckBetas(const std::vector<double> &betas) {
  if (betas.empty()) throw UsageError("--beta needs at least one value");
  for (double b : betas)
    if (!(b > 0.0)) throw UsageError("--beta values must be positive");
}

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommand options.  Every field has a flag; defaults mirror the library.

struct SynthOpts {
  std::string out, truth, format = "text", prefix;
  int speakers = 500, utts = 10, dim = 20, shift_speakers = 0;
  double speaker_scale = 1.0, noise_scale = 1.0, shift_norm = 0.0, shift_inflation = 1.0;
  std::uint64_t seed = 0;
};

struct TrainPldaOpts {
  std::string embeddings, format = "text", out;
  int lda_dim = 0, em_iters = 10;
};

struct TrainNpldaOpts {
  std::string embeddings, format = "text", trials, valid_trials, model, out;
  double alpha = kDefaultAlpha, lr = 5e-4;
  std::vector<double> beta = DefaultBetaVector();
  std::size_t batch_size = 4096;
  int epochs = 20;
  std::uint64_t seed = 0;
  CLI::Option *alpha_opt = nullptr, *beta_opt = nullptr;
};

struct SampleOpts {
  std::string embeddings, format = "text", out;
  std::size_t n_trials = 0;
  double target_fraction = 0.1;
  bool allow_repeats = false;
  std::uint64_t seed = 0;
};

struct ScoreOpts {
  std::string model, embeddings, format = "text", trials, out, enroll_map, cohort_list,
      cohort_embeddings;
};

struct EvaluateOpts {
  std::string scores, trials;
  std::vector<double> beta = DefaultBetaVector();
};

struct AsNormOpts {
  std::string scores, cohort_scores, cohort_list, out;
  std::size_t top_k = 0;
};

struct CalibrateOpts {
  std::string scores, trials, params, out, mode = "logistic";
  double prior = 0.0075, l2 = 1e-4;
  std::vector<double> beta = DefaultBetaVector();
};

struct FuseOpts {
  std::vector<std::string> scores;
  std::string trials, params, out;
  double prior = 0.0075, l2 = 1e-4;
};

struct PlotOpts {
  std::string scores, trials, out;
  std::vector<double> beta = DefaultBetaVector();
};

// ---------------------------------------------------------------------------
// Handlers

void RunSynth(const SynthOpts &o, Streams io) {
  SynthConfig cfg;
  cfg.n_speakers = o.speakers;
  cfg.utts_per_speaker = o.utts;
  cfg.dim = o.dim;
  cfg.speaker_scale = o.speaker_scale;
  cfg.noise_scale = o.noise_scale;
  cfg.seed = o.seed;
  cfg.id_prefix = o.prefix;
  if (o.shift_speakers > 0) {
    if (o.dim < 1) throw UsageError("--dim must be >= 1");
    cfg.shift = DomainShift{o.shift_speakers, RandomOffset(o.dim, o.shift_norm, o.seed),
                            o.shift_inflation};
  }
  SynthData data = Generate(cfg);
  WriteEmbeddings(data.embeddings, o.out, EmbeddingFormatFromString(o.format));
  SaveTruth(data.truth, o.truth);
  io.err << "wrote " << data.embeddings.Size() << " embeddings to " << o.out << '\n';
}

void RunTrainPlda(const TrainPldaOpts &o, Streams io) {
  EmbeddingSet data = LoadEmbeddings(o.embeddings, EmbeddingFormatFromString(o.format));
  std::vector<double> trace;
  GpldaModel model = FitGplda(data, {o.lda_dim, o.em_iters}, &trace);
  for (std::size_t k = 0; k < trace.size(); ++k)
    io.err << "em iteration " << k << " log-likelihood " << trace[k] << '\n';
  SaveGplda(model, o.out);
  io.err << "wrote GPLDA model (R=" << model.LatentDim() << ") to " << o.out << '\n';
}

void RunTrainNplda(const TrainNpldaOpts &o, Streams io) {
  if (o.beta.size() != 2) throw UsageError("--beta must list exactly two values for NPLDA");
  CheckBetas(o.beta);
  EmbeddingSet data = LoadEmbeddings(o.embeddings, EmbeddingFormatFromString(o.format));
  TrialList train = LoadTrials(o.trials);
  NpldaModel init;
  if (PeekModelType(o.model) == ModelType::kNplda) {
    init = LoadNplda(o.model);
    if (o.alpha_opt->count()) init.alpha = o.alpha;
    if (o.beta_opt->count()) init.beta = {o.beta[0], o.beta[1]};
  } else {
    init = InitFromGplda(LoadGplda(o.model), o.alpha, {o.beta[0], o.beta[1]});
  }
  if (!(init.alpha > 0.0)) throw UsageError("--alpha must be positive");
  NpldaTrainConfig cfg;
  cfg.batch_size = o.batch_size;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.seed = o.seed;
  std::unique_ptr<TrialList> valid;
  if (!o.valid_trials.empty()) valid = std::make_unique<TrialList>(LoadTrials(o.valid_trials));
  NpldaTrainResult result = TrainNplda(init, data, train, cfg, valid.get());
  if (!result.loss_trace.empty())
    io.err << "loss first batch " << result.loss_trace.front() << ", last batch "
           << result.loss_trace.back() << '\n';
  for (std::size_t e = 0; e < result.valid_cmin.size(); ++e)
    io.err << "epoch " << e + 1 << " validation c_min " << result.valid_cmin[e] << '\n';
  if (valid) io.err << "selected epoch " << result.best_epoch << '\n';
  SaveNplda(result.model, o.out);
  io.err << "wrote NPLDA model to " << o.out << '\n';
}

void RunSampleTrials(const SampleOpts &o, Streams io) {
  EmbeddingSet data = LoadEmbeddings(o.embeddings, EmbeddingFormatFromString(o.format));
  TrialList trials =
      SampleTrials(data, {o.n_trials, o.target_fraction, o.seed, o.allow_repeats});
  WriteTrials(trials, o.out);
  io.err << "wrote " << trials.size() << " trials to " << o.out << '\n';
}

using AnyModel = std::variant<GpldaModel, NpldaModel>;

AnyModel LoadAnyModel(const std::string &path) {
  switch (PeekModelType(path)) {
    case ModelType::kGplda: return LoadGplda(path);
    case ModelType::kNplda: return LoadNplda(path);
    default: throw DataError(path + ": not a GPLDA or NPLDA model");
  }
}

void RunScore(const ScoreOpts &o, Streams io) {
  AnyModel model = LoadAnyModel(o.model);
  EmbeddingFormat format = EmbeddingFormatFromString(o.format);
  EmbeddingSet data = LoadEmbeddings(o.embeddings, format);
  if (!o.cohort_embeddings.empty())
    data = Concatenate(data, LoadEmbeddings(o.cohort_embeddings, format));
  if (!o.enroll_map.empty()) data = AddEnrollmentModels(data, LoadEnrollmentMap(o.enroll_map));
  TrialList trials = LoadTrials(o.trials);

  if (!o.cohort_list.empty()) {
    // Score every trial side against the cohort instead of the trials.
    std::vector<std::string> cohort = LoadIdList(o.cohort_list);
    std::vector<std::string> sides;
    std::unordered_set<std::string> seen;
    for (const auto &t : trials)
      for (const std::string *id : {&t.enroll, &t.test})
        if (seen.insert(*id).second) sides.push_back(*id);
    TrialList pairs;
    pairs.reserve(sides.size() * cohort.size());
    for (const auto &s : sides)
      for (const auto &c : cohort) pairs.push_back({s, c, TrialLabel::kUnknown});
    trials = std::move(pairs);
  }
  ScoreSet scores = std::visit(
      [&](const auto &m) { return ScoreTrials(m, data, trials); }, model);
  WriteScores(scores, o.out);
  io.err << "wrote " << scores.size() << " scores to " << o.out << '\n';
}

void RunEvaluate(const EvaluateOpts &o, Streams io) {
  CheckBetas(o.beta);
  TrialList trials = LoadTrials(o.trials);
  std::vector<double> s = AlignScores(LoadScores(o.scores), trials);
  std::vector<int> t = TargetIndicators(trials);
  MetricReport r = Evaluate(s, t, o.beta);
  io.out << "eer=" << Fmt(r.eer) << "\tc_min=" << Fmt(r.c_min) << "\tc_primary=" << Fmt(r.c_primary);
  for (std::size_t k = 0; k < r.theta_min.size(); ++k)
    io.out << "\ttheta" << k + 1 << '=' << Fmt(r.theta_min[k]);
  io.out << '\n';
}

void RunAsNorm(const AsNormOpts &o, Streams io) {
  CohortScores cohort = MakeCohortScores(LoadScores(o.cohort_scores), LoadIdList(o.cohort_list));
  std::size_t k = o.top_k == 0 ? DefaultTopK(cohort.CohortSize()) : o.top_k;
  ScoreSet out = AsNorm(LoadScores(o.scores), cohort, k);
  WriteScores(out, o.out);
  io.err << "normalized " << out.size() << " scores with top_k=" << k << '\n';
}

LogisticConfig MakeLogistic(double prior, double l2) {
  LogisticConfig cfg;
  cfg.effective_prior = prior;
  cfg.l2 = l2;
  return cfg;
}

void RunCalibrate(const CalibrateOpts &o, Streams io) {
  if (!o.params.empty()) {
    AffineCalibration cal = LoadCalibration(o.params);
    WriteScores(ApplyCalibration(LoadScores(o.scores), cal), o.out);
    io.err << "applied a=" << cal.a << " b=" << cal.b << '\n';
    return;
  }
  if (o.trials.empty()) throw UsageError("calibrate: fitting needs --trials (or --params to apply)");
  TrialList trials = LoadTrials(o.trials);
  std::vector<double> s = AlignScores(LoadScores(o.scores), trials);
  std::vector<int> t = TargetIndicators(trials);
  AffineCalibration cal;
  if (o.mode == "logistic") {
    SolverTrace trace;
    cal = FitCalibration(s, t, MakeLogistic(o.prior, o.l2), &trace);
    io.err << "converged in " << trace.iterations << " iterations, gradient norm "
           << trace.final_gradient_norm << '\n';
  } else {
    CheckBetas(o.beta);
    cal = FitShiftCalibration(s, t, o.beta);
  }
  WriteCalibration(cal, o.out);
  io.err << "wrote a=" << cal.a << " b=" << cal.b << " to " << o.out << '\n';
}

void RunFuse(const FuseOpts &o, Streams io) {
  std::vector<ScoreSet> systems;
  for (const auto &path : o.scores) systems.push_back(LoadScores(path));
  TrialList order;
  if (!o.params.empty()) {
    for (const auto &s : systems.front()) order.push_back({s.enroll, s.test, TrialLabel::kUnknown});
  } else {
    if (o.trials.empty()) throw UsageError("fuse: fitting needs --trials (or --params to apply)");
    order = LoadTrials(o.trials);
  }
  Eigen::MatrixXd matrix(systems.size(), order.size());
  for (std::size_t k = 0; k < systems.size(); ++k) {
    std::vector<double> aligned = AlignScores(systems[k], order);
    matrix.row(k) = Eigen::Map<Eigen::RowVectorXd>(aligned.data(), aligned.size());
  }
  if (!o.params.empty()) {
    Eigen::VectorXd fused = ApplyFusion(matrix, LoadFusion(o.params));
    ScoreSet out;
    for (std::size_t i = 0; i < order.size(); ++i)
      out.push_back({order[i].enroll, order[i].test, fused(i)});
    WriteScores(out, o.out);
    io.err << "fused " << systems.size() << " systems over " << out.size() << " trials\n";
    return;
  }
  std::vector<int> t = TargetIndicators(order);
  SolverTrace trace;
  FusionModel model = FitFusion(matrix, t, MakeLogistic(o.prior, o.l2), &trace);
  WriteFusion(model, o.out);
  io.err << "converged in " << trace.iterations << " iterations; wrote " << o.out << '\n';
}

void RunPlot(const PlotOpts &o, Streams io) {
  CheckBetas(o.beta);
  TrialList trials = LoadTrials(o.trials);
  std::vector<double> s = AlignScores(LoadScores(o.scores), trials);
  std::vector<int> t = TargetIndicators(trials);
  WritePlotOutputs(s, t, o.beta, o.out);
  io.err << "wrote plot files to " << o.out << '\n';
}

// ---------------------------------------------------------------------------
// Grammar

CLI::Option *InputFile(CLI::App *app, const std::string &flag, std::string &dest,
                       const std::string &help) {
  return app->add_option(flag, dest, help)->required()->check(CLI::ExistingFile);
}

CLI::Option *FormatFlag(CLI::App *app, std::string &dest) {
  return app->add_option("--format", dest, "Embedding file format")
      ->check(CLI::IsMember({"text", "binary"}))
      ->capture_default_str();
}

CLI::Option *BetaFlag(CLI::App *app, std::vector<double> &dest) {
  return app->add_option("--beta", dest, "Cost ratios of the operating points")
      ->delimiter(',')
      ->capture_default_str();
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  Streams io{out, err};
  CLI::App app{"Speaker verification back-end: PLDA/NPLDA training, scoring and evaluation",
               "svb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "svb 0.1.0");

  SynthOpts synth;
  auto *c_synth = app.add_subcommand("synth", "Generate synthetic embeddings from a known model");
  c_synth->add_option("--out", synth.out, "Output embedding file")->required();
  c_synth->add_option("--truth", synth.truth, "Output model file with the true parameters")->required();
  FormatFlag(c_synth, synth.format);
  c_synth->add_option("--speakers", synth.speakers, "Base-domain speakers")->capture_default_str();
  c_synth->add_option("--utts", synth.utts, "Utterances per speaker")->capture_default_str();
  c_synth->add_option("--dim", synth.dim, "Embedding dimension")->capture_default_str();
  c_synth->add_option("--speaker-scale", synth.speaker_scale)->capture_default_str();
  c_synth->add_option("--noise-scale", synth.noise_scale)->capture_default_str();
  c_synth->add_option("--shift-speakers", synth.shift_speakers, "Shifted-domain speakers")
      ->capture_default_str();
  c_synth->add_option("--shift-norm", synth.shift_norm, "Norm of the domain mean offset")
      ->capture_default_str();
  c_synth->add_option("--shift-inflation", synth.shift_inflation,
                      "Within-class covariance factor of the shifted domain")
      ->capture_default_str();
  c_synth->add_option("--prefix", synth.prefix, "Id prefix");
  c_synth->add_option("--seed", synth.seed)->capture_default_str();

  TrainPldaOpts tp;
  auto *c_tp = app.add_subcommand("train-plda", "Train the preprocessing chain and GPLDA");
  InputFile(c_tp, "--embeddings", tp.embeddings, "Training embeddings");
  FormatFlag(c_tp, tp.format);
  c_tp->add_option("--lda-dim", tp.lda_dim, "LDA dimension (0: min(150, D, S-1))")
      ->capture_default_str();
  c_tp->add_option("--em-iters", tp.em_iters)->capture_default_str();
  c_tp->add_option("--out", tp.out, "Output model file")->required();

  TrainNpldaOpts tn;
  auto *c_tn = app.add_subcommand("train-nplda", "Train NPLDA from a GPLDA or NPLDA model");
  InputFile(c_tn, "--embeddings", tn.embeddings, "Training embeddings");
  FormatFlag(c_tn, tn.format);
  InputFile(c_tn, "--trials", tn.trials, "Labeled training trials");
  c_tn->add_option("--valid-trials", tn.valid_trials, "Labeled validation trials")
      ->check(CLI::ExistingFile);
  InputFile(c_tn, "--model", tn.model, "Initial GPLDA or NPLDA model");
  c_tn->add_option("--out", tn.out, "Output model file")->required();
  tn.alpha_opt = c_tn->add_option("--alpha", tn.alpha, "Sigmoid warping factor")->capture_default_str();
  tn.beta_opt = BetaFlag(c_tn, tn.beta);
  c_tn->add_option("--batch-size", tn.batch_size)->capture_default_str();
  c_tn->add_option("--epochs", tn.epochs)->capture_default_str();
  c_tn->add_option("--lr", tn.lr)->capture_default_str();
  c_tn->add_option("--seed", tn.seed)->capture_default_str();

  SampleOpts so;
  auto *c_so = app.add_subcommand("sample-trials", "Sample gender-matched trials");
  InputFile(c_so, "--embeddings", so.embeddings, "Labeled embeddings");
  FormatFlag(c_so, so.format);
  c_so->add_option("--n-trials", so.n_trials)->required();
  c_so->add_option("--target-fraction", so.target_fraction)->capture_default_str();
  c_so->add_flag("--allow-repeats", so.allow_repeats);
  c_so->add_option("--seed", so.seed)->capture_default_str();
  c_so->add_option("--out", so.out, "Output trial file")->required();

  ScoreOpts sc;
  auto *c_sc = app.add_subcommand("score", "Score trials with a GPLDA or NPLDA model");
  InputFile(c_sc, "--model", sc.model, "Model file");
  InputFile(c_sc, "--embeddings", sc.embeddings, "Embeddings");
  FormatFlag(c_sc, sc.format);
  InputFile(c_sc, "--trials", sc.trials, "Trial list");
  c_sc->add_option("--enroll-map", sc.enroll_map, "Lines 'model utt1 utt2 ...'")
      ->check(CLI::ExistingFile);
  c_sc->add_option("--cohort-list", sc.cohort_list,
                   "Score every trial side against these ids instead of the trials")
      ->check(CLI::ExistingFile);
  c_sc->add_option("--cohort-embeddings", sc.cohort_embeddings, "Extra embeddings for the cohort")
      ->check(CLI::ExistingFile);
  c_sc->add_option("--out", sc.out, "Output score file")->required();

  EvaluateOpts ev;
  auto *c_ev = app.add_subcommand("evaluate", "Print EER, C_min and C_primary");
  InputFile(c_ev, "--scores", ev.scores, "Score file");
  InputFile(c_ev, "--trials", ev.trials, "Labeled trials");
  BetaFlag(c_ev, ev.beta);

  AsNormOpts an;
  auto *c_an = app.add_subcommand("asnorm", "Adaptive symmetric score normalization");
  InputFile(c_an, "--scores", an.scores, "Raw trial scores");
  InputFile(c_an, "--cohort-scores", an.cohort_scores, "Scores 'id cohort_id score'");
  InputFile(c_an, "--cohort-list", an.cohort_list, "Cohort ids");
  c_an->add_option("--top-k", an.top_k, "Cohort scores per side (0: min(200, cohort size))")
      ->capture_default_str();
  c_an->add_option("--out", an.out, "Output score file")->required();

  CalibrateOpts ca;
  auto *c_ca = app.add_subcommand("calibrate", "Fit or apply an affine calibration");
  InputFile(c_ca, "--scores", ca.scores, "Score file");
  auto *ca_trials = c_ca->add_option("--trials", ca.trials, "Labeled trials to fit on")
                        ->check(CLI::ExistingFile);
  c_ca->add_option("--params", ca.params, "Apply these parameters instead of fitting")
      ->check(CLI::ExistingFile)
      ->excludes(ca_trials);
  c_ca->add_option("--mode", ca.mode)
      ->check(CLI::IsMember({"logistic", "shift"}))
      ->capture_default_str();
  c_ca->add_option("--prior", ca.prior, "Effective target prior")->capture_default_str();
  c_ca->add_option("--l2", ca.l2)->capture_default_str();
  BetaFlag(c_ca, ca.beta);
  c_ca->add_option("--out", ca.out, "Parameter file (fit) or score file (apply)")->required();

  FuseOpts fu;
  auto *c_fu = app.add_subcommand("fuse", "Fit or apply a linear score fusion");
  c_fu->add_option("--scores", fu.scores, "Score file of one system (repeat per system)")
      ->required()
      ->check(CLI::ExistingFile);
  auto *fu_trials = c_fu->add_option("--trials", fu.trials, "Labeled trials to fit on")
                        ->check(CLI::ExistingFile);
  c_fu->add_option("--params", fu.params, "Apply these weights instead of fitting")
      ->check(CLI::ExistingFile)
      ->excludes(fu_trials);
  c_fu->add_option("--prior", fu.prior, "Effective target prior")->capture_default_str();
  c_fu->add_option("--l2", fu.l2)->capture_default_str();
  c_fu->add_option("--out", fu.out, "Parameter file (fit) or score file (apply)")->required();

  PlotOpts pl;
  auto *c_pl = app.add_subcommand("plot", "Write DET points, histograms and an SVG overlay");
  InputFile(c_pl, "--scores", pl.scores, "Score file");
  InputFile(c_pl, "--trials", pl.trials, "Labeled trials");
  BetaFlag(c_pl, pl.beta);
  c_pl->add_option("--out", pl.out, "Output directory")->required();

  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError &e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App *sub = app.get_subcommands().front();
  err << "svb " << sub->get_name() << " resolved config:\n" << sub->config_to_str(true, false);
  try {
    const std::string &name = sub->get_name();
    if (name == "synth") RunSynth(synth, io);
    else if (name == "train-plda") RunTrainPlda(tp, io);
    else if (name == "train-nplda") RunTrainNplda(tn, io);
    else if (name == "sample-trials") RunSampleTrials(so, io);
    else if (name == "score") RunScore(sc, io);
    else if (name == "evaluate") RunEvaluate(ev, io);
    else if (name == "asnorm") RunAsNorm(an, io);
    else if (name == "calibrate") RunCalibrate(ca, io);
    else if (name == "fuse") RunFuse(fu, io);
    else if (name == "plot") RunPlot(pl, io);
  } catch (const UsageError &e) {
    err << "svb " << sub->get_name() << ": usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "svb " << sub->get_name() << ": error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace svb
