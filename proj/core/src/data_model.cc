// core/src/data_model.cc

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

#include "svb/data_model.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "svb/error.h"

namespace svb {

namespace {

std::vector<std::string> SplitWhitespace(const std::string &line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

bool ParseDouble(const std::string &token, double *value) {
  const char *begin = token.data();
  const char *end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, *value);
  return ec == std::errc() && ptr == end;
}

std::ifstream OpenForRead(const std::string &path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  return is;
}

std::ofstream OpenForWrite(const std::string &path, bool binary) {
  std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc
                                : std::ios::out | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  return os;
}

template <typename UInt>
void WriteLe(std::ostream &os, UInt v) {
  char buf[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, sizeof(UInt));
}

template <typename UInt>
UInt ReadLe(std::istream &is, const std::string &what) {
  unsigned char buf[sizeof(UInt)];
  if (!is.read(reinterpret_cast<char *>(buf), sizeof(UInt)))
    throw DataError("unexpected end of file while reading " + what);
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i)
    v |= static_cast<UInt>(buf[i]) << (8 * i);
  return v;
}

void WriteString16(std::ostream &os, const std::string &s) {
  if (s.size() > 0xffff) throw DataError("identifier too long: " + s.substr(0, 32));
  WriteLe<std::uint16_t>(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string ReadString16(std::istream &is, const std::string &what) {
  auto len = ReadLe<std::uint16_t>(is, what);
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), len))
    throw DataError("unexpected end of file while reading " + what);
  return s;
}

EmbeddingSet LoadEmbeddingsText(const std::string &path) {
  std::ifstream is = OpenForRead(path, false);
  std::vector<std::string> utts, spks;
  std::vector<Gender> genders;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (tok.size() < 4)
      throw DataError(where + ": expected 'utt spk gender v1 ... vD'");
    if (!seen.emplace(tok[0], line_no).second)
      throw DataError(where + ": duplicate utterance id '" + tok[0] + "'");
    Gender g;
    try {
      g = GenderFromString(tok[2]);
    } catch (const DataError &e) {
      throw DataError(where + ": " + e.what());
    }
    std::vector<double> values(tok.size() - 3);
    for (std::size_t j = 3; j < tok.size(); ++j) {
      if (!ParseDouble(tok[j], &values[j - 3]) || !std::isfinite(values[j - 3]))
        throw DataError(where + ": unparseable or non-finite value '" + tok[j] + "'");
    }
    if (!rows.empty() && values.size() != rows.front().size())
      throw DataError(where + ": dimension mismatch (record " +
                      std::to_string(rows.size() + 1) + " has " +
                      std::to_string(values.size()) + " values, expected " +
                      std::to_string(rows.front().size()) + ")");
    utts.push_back(tok[0]);
    spks.push_back(tok[1]);
    genders.push_back(g);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError(path + ": no embedding records");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return EmbeddingSet(std::move(utts), std::move(spks), std::move(genders), std::move(m));
}

EmbeddingSet LoadEmbeddingsBinary(const std::string &path) {
  std::ifstream is = OpenForRead(path, true);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "XVB1")
    throw DataError(path + ": bad magic, expected XVB1");
  auto n = ReadLe<std::uint32_t>(is, "record count");
  auto d = ReadLe<std::uint32_t>(is, "dimension");
  if (d == 0) throw DataError(path + ": dimension must be >= 1");
  std::vector<std::string> utts(n), spks(n);
  std::vector<Gender> genders(n);
  Eigen::MatrixXd m(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string rec = "record " + std::to_string(i + 1);
    utts[i] = ReadString16(is, rec);
    spks[i] = ReadString16(is, rec);
    unsigned char g;
    if (!is.read(reinterpret_cast<char *>(&g), 1))
      throw DataError(path + ": truncated " + rec);
    if (g > 2) throw DataError(path + ": " + rec + ": bad gender code");
    genders[i] = static_cast<Gender>(g);
    for (std::uint32_t j = 0; j < d; ++j) {
      auto bits = ReadLe<std::uint32_t>(is, rec);
      float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) throw DataError(path + ": " + rec + ": non-finite value");
      m(i, j) = f;
    }
  }
  return EmbeddingSet(std::move(utts), std::move(spks), std::move(genders), std::move(m));
}

}  // namespace

char GenderToChar(Gender g) {
  switch (g) {
    case Gender::kMale: return 'M';
    case Gender::kFemale: return 'F';
    default: return 'U';
  }
}

Gender GenderFromString(const std::string &token) {
  if (token == "M") return Gender::kMale;
  if (token == "F") return Gender::kFemale;
  if (token == "U") return Gender::kUnknown;
  throw DataError("bad gender tag '" + token + "' (expected M, F or U)");
}

EmbeddingSet::EmbeddingSet(std::vector<std::string> utt_ids,
                           std::vector<std::string> speakers,
                           std::vector<Gender> genders, Eigen::MatrixXd matrix)
    : utt_ids_(std::move(utt_ids)),
      speakers_(std::move(speakers)),
      genders_(std::move(genders)),
      matrix_(std::move(matrix)) {
  const std::size_t n = utt_ids_.size();
  if (speakers_.size() != n || genders_.size() != n ||
      static_cast<std::size_t>(matrix_.rows()) != n)
    throw DataError("EmbeddingSet: field lengths disagree");
  if (n > 0 && matrix_.cols() < 1)
    throw DataError("EmbeddingSet: dimension must be >= 1");
  if (!matrix_.allFinite())
    throw DataError("EmbeddingSet: non-finite embedding entry");
  index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (utt_ids_[i].empty()) throw DataError("EmbeddingSet: empty utterance id");
    if (speakers_[i].empty())
      throw DataError("EmbeddingSet: empty speaker id for " + utt_ids_[i]);
    if (!index_.emplace(utt_ids_[i], i).second)
      throw DataError("EmbeddingSet: duplicate utterance id '" + utt_ids_[i] + "'");
  }
}

long EmbeddingSet::Find(const std::string &utt_id) const {
  auto it = index_.find(utt_id);
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

std::size_t EmbeddingSet::IndexOf(const std::string &utt_id) const {
  auto it = index_.find(utt_id);
  if (it == index_.end()) throw DataError("unknown utterance id '" + utt_id + "'");
  return it->second;
}

EmbeddingSet EmbeddingSet::Subset(const std::vector<std::size_t> &rows) const {
  std::vector<std::string> u, s;
  std::vector<Gender> g;
  Eigen::MatrixXd m(rows.size(), matrix_.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::size_t i = rows[k];
    u.push_back(utt_ids_.at(i));
    s.push_back(speakers_[i]);
    g.push_back(genders_[i]);
    m.row(k) = matrix_.row(i);
  }
  return EmbeddingSet(std::move(u), std::move(s), std::move(g), std::move(m));
}

EmbeddingSet Concatenate(const EmbeddingSet &a, const EmbeddingSet &b) {
  if (a.Size() == 0) return b;
  if (b.Size() == 0) return a;
  if (a.Dim() != b.Dim()) throw DataError("Concatenate: dimension mismatch");
  auto u = a.UttIds();
  auto s = a.Speakers();
  auto g = a.Genders();
  u.insert(u.end(), b.UttIds().begin(), b.UttIds().end());
  s.insert(s.end(), b.Speakers().begin(), b.Speakers().end());
  g.insert(g.end(), b.Genders().begin(), b.Genders().end());
  Eigen::MatrixXd m(a.Size() + b.Size(), a.Dim());
  m << a.Matrix(), b.Matrix();
  return EmbeddingSet(std::move(u), std::move(s), std::move(g), std::move(m));
}

SpeakerIndex::SpeakerIndex(const EmbeddingSet &set) : of_row(set.Size(), -1) {
  std::unordered_map<std::string, int> ids;
  for (std::size_t i = 0; i < set.Size(); ++i) {
    if (!set.IsLabeled(i)) continue;
    auto [it, inserted] = ids.emplace(set.Speakers()[i], static_cast<int>(names.size()));
    if (inserted) {
      names.push_back(set.Speakers()[i]);
      rows_of_speaker.emplace_back();
    }
    of_row[i] = it->second;
    rows_of_speaker[it->second].push_back(i);
  }
}

std::vector<int> TargetIndicators(const TrialList &trials) {
  std::vector<int> t(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    switch (trials[i].label) {
      case TrialLabel::kTarget: t[i] = 1; break;
      case TrialLabel::kNontarget: t[i] = 0; break;
      default:
        throw DataError("trial " + std::to_string(i + 1) + " (" + trials[i].enroll +
                        " " + trials[i].test + ") has no target/nontarget label");
    }
  }
  return t;
}

std::vector<double> ScoreValues(const ScoreSet &scores) {
  std::vector<double> v(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) v[i] = scores[i].score;
  return v;
}

std::vector<double> AlignScores(const ScoreSet &scores, const TrialList &trials) {
  std::map<std::pair<std::string, std::string>, double> by_pair;
  for (const auto &s : scores) {
    if (!by_pair.emplace(std::make_pair(s.enroll, s.test), s.score).second)
      throw DataError("duplicate score for pair (" + s.enroll + ", " + s.test + ")");
  }
  std::vector<double> out(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto it = by_pair.find({trials[i].enroll, trials[i].test});
    if (it == by_pair.end())
      throw DataError("no score for trial " + std::to_string(i + 1) + " (" +
                      trials[i].enroll + " " + trials[i].test + ")");
    out[i] = it->second;
  }
  return out;
}

EmbeddingFormat EmbeddingFormatFromString(const std::string &name) {
  if (name == "text") return EmbeddingFormat::kText;
  if (name == "binary") return EmbeddingFormat::kBinary;
  throw UsageError("unknown embedding format '" + name + "' (text|binary)");
}

EmbeddingSet LoadEmbeddings(const std::string &path, EmbeddingFormat format) {
  return format == EmbeddingFormat::kText ? LoadEmbeddingsText(path)
                                          : LoadEmbeddingsBinary(path);
}

void WriteEmbeddings(const EmbeddingSet &set, const std::string &path,
                     EmbeddingFormat format) {
  if (format == EmbeddingFormat::kText) {
    std::ofstream os = OpenForWrite(path, false);
    char buf[32];
    for (std::size_t i = 0; i < set.Size(); ++i) {
      os << set.UttIds()[i] << ' ' << set.Speakers()[i] << ' '
         << GenderToChar(set.Genders()[i]);
      for (int j = 0; j < set.Dim(); ++j) {
        std::snprintf(buf, sizeof(buf), " %.17g", set.Matrix()(i, j));
        os << buf;
      }
      os << '\n';
    }
    if (!os) throw DataError("error writing '" + path + "'");
    return;
  }
  std::ofstream os = OpenForWrite(path, true);
  os.write("XVB1", 4);
  WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(set.Size()));
  WriteLe<std::uint32_t>(os, static_cast<std::uint32_t>(set.Dim()));
  for (std::size_t i = 0; i < set.Size(); ++i) {
    WriteString16(os, set.UttIds()[i]);
    WriteString16(os, set.Speakers()[i]);
    os.put(static_cast<char>(set.Genders()[i]));
    for (int j = 0; j < set.Dim(); ++j)
      WriteLe<std::uint32_t>(os, std::bit_cast<std::uint32_t>(
                                     static_cast<float>(set.Matrix()(i, j))));
  }
  if (!os) throw DataError("error writing '" + path + "'");
}

TrialList LoadTrials(const std::string &path) {
  std::ifstream is = OpenForRead(path, false);
  TrialList trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (tok.size() < 2 || tok.size() > 3)
      throw DataError(where + ": malformed trial line (expected 'enroll test [label]')");
    Trial t{tok[0], tok[1], TrialLabel::kUnknown};
    if (tok.size() == 3) {
      if (tok[2] == "target") t.label = TrialLabel::kTarget;
      else if (tok[2] == "nontarget") t.label = TrialLabel::kNontarget;
      else throw DataError(where + ": bad label '" + tok[2] + "' (target|nontarget)");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void WriteTrials(const TrialList &trials, const std::string &path) {
  std::ofstream os = OpenForWrite(path, false);
  for (const auto &t : trials) {
    os << t.enroll << ' ' << t.test;
    if (t.label == TrialLabel::kTarget) os << " target";
    else if (t.label == TrialLabel::kNontarget) os << " nontarget";
    os << '\n';
  }
  if (!os) throw DataError("error writing '" + path + "'");
}

ScoreSet LoadScores(const std::string &path) {
  std::ifstream is = OpenForRead(path, false);
  ScoreSet scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (tok.size() != 3)
      throw DataError(where + ": malformed score line (expected 'enroll test score')");
    double v;
    if (!ParseDouble(tok[2], &v) || !std::isfinite(v))
      throw DataError(where + ": unparseable or non-finite score '" + tok[2] + "'");
    scores.push_back({tok[0], tok[1], v});
  }
  return scores;
}

void WriteScores(const ScoreSet &scores, const std::string &path) {
  std::ofstream os = OpenForWrite(path, false);
  char buf[64];
  for (const auto &s : scores) {
    if (!std::isfinite(s.score))
      throw NumericError("non-finite score for (" + s.enroll + ", " + s.test + ")");
    std::snprintf(buf, sizeof(buf), "%.9f", s.score);
    os << s.enroll << ' ' << s.test << ' ' << buf << '\n';
  }
  if (!os) throw DataError("error writing '" + path + "'");
}

}  // namespace svb
