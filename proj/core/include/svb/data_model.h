// core/include/svb/data_model.h

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

#ifndef SVB_DATA_MODEL_H_
#define SVB_DATA_MODEL_H_

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace svb {

/// Speaker id reserved for utterances without a speaker label.
inline constexpr const char *kUnlabeledSpeaker = "-";

enum class Gender : unsigned char { kMale = 0, kFemale = 1, kUnknown = 2 };

char GenderToChar(Gender g);
/// Parses "M", "F" or "U"; throws DataError otherwise.
Gender GenderFromString(const std::string &token);

/**
   A labeled set of fixed-dimensional speaker embeddings.  Row i of matrix()
   belongs to utterance utt_ids()[i].  Immutable once constructed; the
   constructor enforces unique ids, a consistent dimension D >= 1 and finite
   entries.
*/
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::vector<std::string> utt_ids,
               std::vector<std::string> speakers,
               std::vector<Gender> genders,
               Eigen::MatrixXd matrix);

  std::size_t Size() const { return utt_ids_.size(); }
  int Dim() const { return static_cast<int>(matrix_.cols()); }

  const std::vector<std::string> &UttIds() const { return utt_ids_; }
  const std::vector<std::string> &Speakers() const { return speakers_; }
  const std::vector<Gender> &Genders() const { return genders_; }
  const Eigen::MatrixXd &Matrix() const { return matrix_; }

  Eigen::VectorXd Row(std::size_t i) const { return matrix_.row(i).transpose(); }

  /// Row index of an utterance id, or -1 if absent.
  long Find(const std::string &utt_id) const;
  /// Row index of an utterance id; throws DataError if absent.
  std::size_t IndexOf(const std::string &utt_id) const;

  bool IsLabeled(std::size_t i) const { return speakers_[i] != kUnlabeledSpeaker; }

  /// Rows in `rows`, in that order.
  EmbeddingSet Subset(const std::vector<std::size_t> &rows) const;

 private:
  std::vector<std::string> utt_ids_;
  std::vector<std::string> speakers_;
  std::vector<Gender> genders_;
  Eigen::MatrixXd matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Concatenates sets with equal dimension; ids must stay unique.
EmbeddingSet Concatenate(const EmbeddingSet &a, const EmbeddingSet &b);

/**
   Maps the labeled utterances of a set onto contiguous speaker indices
   0..NumSpeakers()-1, in order of first appearance.  Unlabeled utterances get
   index -1.
*/
struct SpeakerIndex {
  std::vector<int> of_row;
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> rows_of_speaker;

  explicit SpeakerIndex(const EmbeddingSet &set);
  int NumSpeakers() const { return static_cast<int>(names.size()); }
};

enum class TrialLabel : unsigned char { kUnknown = 0, kTarget = 1, kNontarget = 2 };

struct Trial {
  std::string enroll;
  std::string test;
  TrialLabel label = TrialLabel::kUnknown;

  bool operator==(const Trial &) const = default;
};

/// Ordered list of (enroll, test[, label]) trials.
using TrialList = std::vector<Trial>;

/// Returns t_i in {0, 1} (1 = target) per trial; throws DataError if any
/// trial is unlabeled.
std::vector<int> TargetIndicators(const TrialList &trials);

struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;

  bool operator==(const ScoredTrial &) const = default;
};

using ScoreSet = std::vector<ScoredTrial>;

std::vector<double> ScoreValues(const ScoreSet &scores);

/// Scores aligned with `trials` by (enroll, test) pair.  Order in `scores`
/// does not matter; every trial must have exactly one score.
std::vector<double> AlignScores(const ScoreSet &scores, const TrialList &trials);

enum class EmbeddingFormat { kText, kBinary };

EmbeddingFormat EmbeddingFormatFromString(const std::string &name);

EmbeddingSet LoadEmbeddings(const std::string &path, EmbeddingFormat format);
void WriteEmbeddings(const EmbeddingSet &set, const std::string &path,
                     EmbeddingFormat format);

TrialList LoadTrials(const std::string &path);
void WriteTrials(const TrialList &trials, const std::string &path);

ScoreSet LoadScores(const std::string &path);
void WriteScores(const ScoreSet &scores, const std::string &path);

}  // namespace svb

#endif  // SVB_DATA_MODEL_H_
