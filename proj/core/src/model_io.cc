// core/src/model_io.cc

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

#include "svb/model_io.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "svb/error.h"

namespace svb {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'B', 'M'};

class Writer {
 public:
  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U16(std::uint16_t v) { Le(v, 2); }
  void U32(std::uint32_t v) { Le(v, 4); }
  void F64(double v) { Le(std::bit_cast<std::uint64_t>(v), 8); }
  void Bytes(const char *p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char> &Buffer() const { return buf_; }

 private:
  void Le(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}
  std::uint8_t U8() { return static_cast<std::uint8_t>(Le(1)); }
  std::uint16_t U16() { return static_cast<std::uint16_t>(Le(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Le(4)); }
  double F64() { return std::bit_cast<double>(Le(8)); }
  std::string Str(std::size_t n) {
    Need(n);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t Remaining() const { return data_.size() - pos_; }
  [[noreturn]] void Fail(const std::string &what) const {
    throw DataError(path_ + ": " + what + " at byte " + std::to_string(pos_));
  }

 private:
  void Need(std::size_t n) const {
    if (Remaining() < n) Fail("truncated model file");
  }
  std::uint64_t Le(int n) {
    Need(n);
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += n;
    return v;
  }
  std::vector<char> data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::vector<char> ReadFile(const std::string &path, std::size_t max_bytes = SIZE_MAX) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  std::vector<char> data;
  char c;
  while (data.size() < max_bytes && is.get(c)) data.push_back(c);
  return data;
}

ModelType CheckHeader(Reader &r) {
  if (r.Str(4) != std::string(kMagic, 4)) r.Fail("not a model file (bad magic)");
  std::uint8_t version = r.U8();
  if (version != kModelFormatVersion)
    r.Fail("unsupported model format version " + std::to_string(version));
  std::uint8_t type = r.U8();
  if (type < 1 || type > 3) r.Fail("unknown model type tag " + std::to_string(type));
  return static_cast<ModelType>(type);
}

const char *TypeName(ModelType t) {
  switch (t) {
    case ModelType::kGplda: return "GPLDA";
    case ModelType::kNplda: return "NPLDA";
    case ModelType::kTruth: return "synthetic truth";
  }
  return "?";
}

ModelContainer ReadTyped(const std::string &path, ModelType expected) {
  ModelContainer c = ReadContainer(path);
  if (c.type != expected)
    throw DataError(path + ": expected a " + TypeName(expected) + " model but found a " +
                    TypeName(c.type) + " model");
  return c;
}

Eigen::MatrixXd Column(const Eigen::VectorXd &v) { return v; }

Eigen::VectorXd AsVector(const ModelContainer &c, const std::string &name) {
  const Eigen::MatrixXd &m = c.Get(name);
  if (m.cols() != 1 && m.size() != 0)
    throw DataError("model entry '" + name + "' must be a column vector");
  return m.size() == 0 ? Eigen::VectorXd() : Eigen::VectorXd(m.col(0));
}

double AsScalar(const ModelContainer &c, const std::string &name) {
  const Eigen::MatrixXd &m = c.Get(name);
  if (m.rows() != 1 || m.cols() != 1) throw DataError("model entry '" + name + "' must be 1x1");
  return m(0, 0);
}

Eigen::MatrixXd Scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

void ModelContainer::Add(std::string name, Eigen::MatrixXd value) {
  entries.emplace_back(std::move(name), std::move(value));
}

bool ModelContainer::Has(const std::string &name) const {
  return std::any_of(entries.begin(), entries.end(),
                     [&](const auto &e) { return e.first == name; });
}

const Eigen::MatrixXd &ModelContainer::Get(const std::string &name) const {
  for (const auto &e : entries)
    if (e.first == name) return e.second;
  throw DataError("model file has no entry '" + name + "'");
}

void WriteContainer(const ModelContainer &container, const std::string &path) {
  Writer w;
  w.Bytes(kMagic, 4);
  w.U8(kModelFormatVersion);
  w.U8(static_cast<std::uint8_t>(container.type));
  w.U32(static_cast<std::uint32_t>(container.entries.size()));
  for (const auto &[name, m] : container.entries) {
    if (name.size() > 0xffff) throw UsageError("model entry name too long");
    w.U16(static_cast<std::uint16_t>(name.size()));
    w.Bytes(name.data(), name.size());
    w.U32(static_cast<std::uint32_t>(m.rows()));
    w.U32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.F64(m(i, j));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os.write(w.Buffer().data(), static_cast<std::streamsize>(w.Buffer().size()));
  if (!os) throw DataError("error writing '" + path + "'");
}

ModelContainer ReadContainer(const std::string &path) {
  Reader r(ReadFile(path), path);
  ModelContainer c;
  c.type = CheckHeader(r);
  std::uint32_t count = r.U32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string name = r.Str(r.U16());
    std::uint32_t rows = r.U32(), cols = r.U32();
    if (static_cast<std::uint64_t>(rows) * cols * 8 > r.Remaining())
      r.Fail("entry '" + name + "' is larger than the file");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.F64();
    if (!m.allFinite()) r.Fail("entry '" + name + "' has non-finite values");
    c.Add(std::move(name), std::move(m));
  }
  if (r.Remaining() != 0) r.Fail("trailing bytes after the last entry");
  return c;
}

ModelType PeekModelType(const std::string &path) {
  Reader r(ReadFile(path, 6), path);
  return CheckHeader(r);
}

void SaveGplda(const GpldaModel &model, const std::string &path) {
  const Preprocessor &p = model.GetPreprocessor();
  ModelContainer c;
  c.type = ModelType::kGplda;
  c.Add("mean", Column(p.mean));
  c.Add("lda", p.lda);
  c.Add("norm_mean", Column(p.norm_mean));
  c.Add("diag", p.diag_transform);
  c.Add("phi", model.Phi());
  c.Add("sigma_wc", model.SigmaWc());
  WriteContainer(c, path);
}

GpldaModel LoadGplda(const std::string &path) {
  ModelContainer c = ReadTyped(path, ModelType::kGplda);
  Preprocessor p;
  p.mean = AsVector(c, "mean");
  p.lda = c.Get("lda");
  p.norm_mean = AsVector(c, "norm_mean");
  p.diag_transform = c.Get("diag");
  try {
    return GpldaModel(std::move(p), c.Get("phi"), c.Get("sigma_wc"));
  } catch (const Error &e) {
    throw DataError(path + ": invalid GPLDA model: " + e.what());
  }
}

void SaveNplda(const NpldaModel &model, const std::string &path) {
  const NpldaParams &p = model.params;
  ModelContainer c;
  c.type = ModelType::kNplda;
  c.Add("w1", p.w1);
  c.Add("b1", Column(p.b1));
  c.Add("w2", p.w2);
  c.Add("b2", Column(p.b2));
  c.Add("P", p.P);
  c.Add("Q", p.Q);
  c.Add("c", Scalar(p.c));
  c.Add("theta", Column(Eigen::Vector2d(p.theta[0], p.theta[1])));
  c.Add("alpha", Scalar(model.alpha));
  c.Add("beta", Column(Eigen::Vector2d(model.beta[0], model.beta[1])));
  WriteContainer(c, path);
}

NpldaModel LoadNplda(const std::string &path) {
  ModelContainer c = ReadTyped(path, ModelType::kNplda);
  NpldaModel m;
  NpldaParams &p = m.params;
  p.w1 = c.Get("w1");
  p.b1 = AsVector(c, "b1");
  p.w2 = c.Get("w2");
  p.b2 = AsVector(c, "b2");
  p.P = c.Get("P");
  p.Q = c.Get("Q");
  p.c = AsScalar(c, "c");
  Eigen::VectorXd theta = AsVector(c, "theta"), beta = AsVector(c, "beta");
  if (theta.size() != 2 || beta.size() != 2)
    throw DataError(path + ": theta and beta must have two entries");
  p.theta = {theta(0), theta(1)};
  m.beta = {beta(0), beta(1)};
  m.alpha = AsScalar(c, "alpha");
  const Eigen::Index r = p.w1.rows();
  if (p.b1.size() != r || p.w2.rows() != r || p.w2.cols() != r || p.b2.size() != r ||
      p.P.rows() != r || p.P.cols() != r || p.Q.rows() != r || p.Q.cols() != r)
    throw DataError(path + ": inconsistent NPLDA layer shapes");
  if (!(m.alpha > 0.0) || !(m.beta[0] > 0.0) || !(m.beta[1] > 0.0))
    throw DataError(path + ": alpha and beta must be positive");
  return m;
}

void SaveTruth(const SynthTruth &truth, const std::string &path) {
  ModelContainer c;
  c.type = ModelType::kTruth;
  c.Add("phi", truth.phi);
  c.Add("sigma_wc", truth.sigma_wc);
  c.Add("shift_offset", Column(truth.shift_offset));
  c.Add("shift_inflation", Scalar(truth.shift_inflation));
  WriteContainer(c, path);
}

SynthTruth LoadTruth(const std::string &path) {
  ModelContainer c = ReadTyped(path, ModelType::kTruth);
  SynthTruth t;
  t.phi = c.Get("phi");
  t.sigma_wc = c.Get("sigma_wc");
  t.shift_offset = AsVector(c, "shift_offset");
  t.shift_inflation = AsScalar(c, "shift_inflation");
  return t;
}

}  // namespace svb
