// tests/model_io_test.cc

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

#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "svb/error.h"
#include "svb/model_io.h"
#include "svb/synth.h"
#include "test_util.h"

namespace svb {
namespace {

using testing::ReadBytes;
using testing::TempDir;

GpldaModel SmallGplda() {
  SynthConfig c;
  c.n_speakers = 12;
  c.utts_per_speaker = 4;
  c.dim = 5;
  c.seed = 3;
  return FitGplda(Generate(c).embeddings, {4, 3});
}

void WriteBytes(const std::string &path, const std::string &bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

TEST(ModelIo, GpldaRoundTripIsExact) {
  TempDir dir("model");
  GpldaModel m = SmallGplda();
  SaveGplda(m, dir.File("g.mdl"));
  EXPECT_EQ(PeekModelType(dir.File("g.mdl")), ModelType::kGplda);
  GpldaModel back = LoadGplda(dir.File("g.mdl"));
  EXPECT_EQ(back.Phi(), m.Phi());
  EXPECT_EQ(back.SigmaWc(), m.SigmaWc());
  EXPECT_EQ(back.GetPreprocessor().lda, m.GetPreprocessor().lda);
  EXPECT_EQ(back.Scoring().Q, m.Scoring().Q);
  SaveGplda(back, dir.File("g2.mdl"));
  EXPECT_EQ(ReadBytes(dir.File("g.mdl")), ReadBytes(dir.File("g2.mdl")));
}

TEST(ModelIo, NpldaRoundTripIsExact) {
  TempDir dir("model");
  NpldaModel m = InitFromGplda(SmallGplda(), 7.0, {10.0, 20.0});
  m.params.theta[0] = -0.125;
  SaveNplda(m, dir.File("n.mdl"));
  NpldaModel back = LoadNplda(dir.File("n.mdl"));
  EXPECT_EQ(back.params.Pack(), m.params.Pack());
  EXPECT_EQ(back.alpha, 7.0);
  EXPECT_EQ(back.beta, m.beta);
  EXPECT_THROW(LoadGplda(dir.File("n.mdl")), DataError);
}

TEST(ModelIo, TruthRoundTrip) {
  TempDir dir("model");
  SynthConfig c;
  c.n_speakers = 2;
  c.utts_per_speaker = 2;
  c.dim = 3;
  c.shift = DomainShift{1, RandomOffset(3, 1.0, 2), 2.5};
  SynthTruth t = Generate(c).truth;
  SaveTruth(t, dir.File("t.mdl"));
  SynthTruth back = LoadTruth(dir.File("t.mdl"));
  EXPECT_EQ(back.phi, t.phi);
  EXPECT_EQ(back.sigma_wc, t.sigma_wc);
  EXPECT_EQ(back.shift_offset, t.shift_offset);
  EXPECT_EQ(back.shift_inflation, 2.5);
}

TEST(ModelIo, HeaderLayout) {
  TempDir dir("model");
  ModelContainer c;
  c.type = ModelType::kTruth;
  Eigen::MatrixXd v(1, 2);
  v << 1.0, -2.0;
  c.Add("ab", v);
  WriteContainer(c, dir.File("c"));
  std::string bytes = ReadBytes(dir.File("c"));
  ASSERT_EQ(bytes.size(), 4u + 1 + 1 + 4 + 2 + 2 + 4 + 4 + 16);
  EXPECT_EQ(bytes.substr(0, 4), "SVBM");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 3);
  EXPECT_EQ(bytes.substr(6, 4), std::string("\x01\x00\x00\x00", 4));
  double second;
  std::memcpy(&second, bytes.data() + bytes.size() - 8, 8);  // little-endian host
  EXPECT_EQ(second, -2.0);
  ModelContainer back = ReadContainer(dir.File("c"));
  EXPECT_EQ(back.Get("ab"), v);
  EXPECT_FALSE(back.Has("x"));
  EXPECT_THROW(back.Get("x"), DataError);
}

TEST(ModelIo, RejectsCorruptFiles) {
  TempDir dir("model");
  SaveGplda(SmallGplda(), dir.File("g.mdl"));
  std::string good = ReadBytes(dir.File("g.mdl"));
  WriteBytes(dir.File("trailing"), good + "x");
  EXPECT_THROW(LoadGplda(dir.File("trailing")), DataError);
  WriteBytes(dir.File("short"), good.substr(0, good.size() - 3));
  EXPECT_THROW(LoadGplda(dir.File("short")), DataError);
  WriteBytes(dir.File("magic"), "XXXX" + good.substr(4));
  EXPECT_THROW(LoadGplda(dir.File("magic")), DataError);
  std::string version = good;
  version[4] = 9;
  WriteBytes(dir.File("version"), version);
  EXPECT_THROW(LoadGplda(dir.File("version")), DataError);
  EXPECT_THROW(LoadGplda(dir.File("missing")), DataError);

  ModelContainer c;
  Eigen::MatrixXd v(1, 1);
  v(0, 0) = std::numeric_limits<double>::quiet_NaN();
  c.Add("v", v);
  WriteContainer(c, dir.File("nan"));
  EXPECT_THROW(ReadContainer(dir.File("nan")), DataError);
}

}  // namespace
}  // namespace svb
