// tests/data_model_test.cc

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

#include "svb/data_model.h"
#include "svb/error.h"
#include "test_util.h"

namespace svb {
namespace {

using testing::TempDir;
using testing::WriteText;

std::string ErrorOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const DataError &e) {
    return e.what();
  }
  return "";
}

TEST(EmbeddingIo, ParsesSingleRecord) {
  TempDir dir("emb");
  WriteText(dir.File("e.txt"), "u1 s1 M 1.0 2.0\n");
  EmbeddingSet set = LoadEmbeddings(dir.File("e.txt"), EmbeddingFormat::kText);
  ASSERT_EQ(set.Size(), 1u);
  EXPECT_EQ(set.Dim(), 2);
  EXPECT_EQ(set.Speakers()[0], "s1");
  EXPECT_EQ(set.Genders()[0], Gender::kMale);
  EXPECT_EQ(set.Matrix()(0, 1), 2.0);
}

TEST(EmbeddingIo, DimensionMismatchNamesRecordTwo) {
  TempDir dir("emb");
  WriteText(dir.File("e.txt"), "u1 s1 M 1 2\nu2 s1 F 1 2 3\n");
  std::string msg = ErrorOf([&] { LoadEmbeddings(dir.File("e.txt"), EmbeddingFormat::kText); });
  EXPECT_NE(msg.find("record 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
}

TEST(EmbeddingIo, RejectsBadInput) {
  TempDir dir("emb");
  WriteText(dir.File("dup.txt"), "u1 s1 M 1\nu1 s2 F 2\n");
  EXPECT_NE(ErrorOf([&] { LoadEmbeddings(dir.File("dup.txt"), EmbeddingFormat::kText); })
                .find("duplicate"),
            std::string::npos);
  WriteText(dir.File("nan.txt"), "u1 s1 M nan\n");
  EXPECT_THROW(LoadEmbeddings(dir.File("nan.txt"), EmbeddingFormat::kText), DataError);
  WriteText(dir.File("g.txt"), "u1 s1 X 1\n");
  EXPECT_THROW(LoadEmbeddings(dir.File("g.txt"), EmbeddingFormat::kText), DataError);
  EXPECT_THROW(LoadEmbeddings(dir.File("missing.txt"), EmbeddingFormat::kText), DataError);
}

TEST(EmbeddingIo, BinaryRoundTripIsBitExact) {
  TempDir dir("emb");
  std::mt19937_64 rng(3);
  Eigen::MatrixXd m = testing::RandomMatrix(5, 7, rng);
  // The binary payload is f32; values representable in f32 round-trip exactly.
  m = m.cast<float>().cast<double>();
  EmbeddingSet set({"a", "b", "c", "d", "e"}, {"s1", "s1", "s2", "-", "s3"},
                   {Gender::kMale, Gender::kMale, Gender::kFemale, Gender::kUnknown,
                    Gender::kFemale},
                   m);
  WriteEmbeddings(set, dir.File("e.xvb"), EmbeddingFormat::kBinary);
  EmbeddingSet back = LoadEmbeddings(dir.File("e.xvb"), EmbeddingFormat::kBinary);
  EXPECT_EQ(back.UttIds(), set.UttIds());
  EXPECT_EQ(back.Speakers(), set.Speakers());
  EXPECT_EQ(back.Genders(), set.Genders());
  EXPECT_EQ(back.Matrix(), set.Matrix());
  EXPECT_FALSE(back.IsLabeled(3));
}

TEST(EmbeddingIo, TextRoundTripIsExact) {
  TempDir dir("emb");
  std::mt19937_64 rng(4);
  EmbeddingSet set({"a", "b"}, {"s1", "s2"}, {Gender::kMale, Gender::kFemale},
                   testing::RandomMatrix(2, 3, rng));
  WriteEmbeddings(set, dir.File("e.txt"), EmbeddingFormat::kText);
  EXPECT_EQ(LoadEmbeddings(dir.File("e.txt"), EmbeddingFormat::kText).Matrix(), set.Matrix());
}

TEST(EmbeddingSet, EnforcesInvariants) {
  Eigen::MatrixXd m(2, 1);
  m << 1, 2;
  EXPECT_THROW(EmbeddingSet({"a", "a"}, {"s", "s"}, {Gender::kMale, Gender::kMale}, m),
               DataError);
  m(1, 0) = std::nan("");
  EXPECT_THROW(EmbeddingSet({"a", "b"}, {"s", "s"}, {Gender::kMale, Gender::kMale}, m),
               DataError);
  EXPECT_THROW(EmbeddingSet({"a"}, {"s"}, {Gender::kMale}, Eigen::MatrixXd(1, 0)), DataError);
}

TEST(TrialIo, ParsesLabels) {
  TempDir dir("trials");
  WriteText(dir.File("t1"), "e1 t1 target\n");
  TrialList t = LoadTrials(dir.File("t1"));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].label, TrialLabel::kTarget);
  WriteText(dir.File("t2"), "e1 t1\n");
  EXPECT_EQ(LoadTrials(dir.File("t2"))[0].label, TrialLabel::kUnknown);
  WriteText(dir.File("t3"), "e1 t1 bogus\n");
  std::string msg = ErrorOf([&] { LoadTrials(dir.File("t3")); });
  EXPECT_NE(msg.find(":1:"), std::string::npos) << msg;
}

TEST(TrialIo, RoundTripPreservesOrder) {
  TempDir dir("trials");
  TrialList t{{"b", "a", TrialLabel::kNontarget}, {"a", "b", TrialLabel::kTarget},
              {"c", "d", TrialLabel::kUnknown}};
  WriteTrials(t, dir.File("t"));
  EXPECT_EQ(LoadTrials(dir.File("t")), t);
}

TEST(ScoreIo, FormatsNineDecimals) {
  TempDir dir("scores");
  WriteScores({{"e1", "t1", 0.0}}, dir.File("s"));
  EXPECT_EQ(testing::ReadBytes(dir.File("s")), "e1 t1 0.000000000\n");
  WriteScores({}, dir.File("empty"));
  EXPECT_EQ(testing::ReadBytes(dir.File("empty")), "");
  WriteScores({{"e1", "t1", 1.0 / 3.0}}, dir.File("third"));
  EXPECT_LT(std::abs(LoadScores(dir.File("third"))[0].score - 1.0 / 3.0), 1e-8);
}

TEST(ScoreIo, AlignsByPair) {
  ScoreSet s{{"b", "c", 2.0}, {"a", "b", 1.0}};
  TrialList t{{"a", "b"}, {"b", "c"}};
  EXPECT_EQ(AlignScores(s, t), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(AlignScores({{"a", "b", 1.0}}, t), DataError);
}

TEST(TrialLabels, IndicatorsRequireLabels) {
  TrialList t{{"a", "b", TrialLabel::kTarget}, {"a", "c", TrialLabel::kNontarget}};
  EXPECT_EQ(TargetIndicators(t), (std::vector<int>{1, 0}));
  t.push_back({"x", "y", TrialLabel::kUnknown});
  EXPECT_THROW(TargetIndicators(t), DataError);
}

}  // namespace
}  // namespace svb
