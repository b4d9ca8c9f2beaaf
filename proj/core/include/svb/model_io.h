// core/include/svb/model_io.h

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

#ifndef SVB_MODEL_IO_H_
#define SVB_MODEL_IO_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "svb/gplda.h"
#include "svb/nplda.h"
#include "svb/synth.h"

namespace svb {

/**
   Model files are a tagged list of named f64 matrices:

     "SVBM"  u8 version  u8 type  u32 count
     count x { u16 name_len, name, u32 rows, u32 cols, rows*cols f64 row-major }

   All integers and floats are little-endian.
*/
enum class ModelType : std::uint8_t { kGplda = 1, kNplda = 2, kTruth = 3 };

inline constexpr std::uint8_t kModelFormatVersion = 1;

struct ModelContainer {
  ModelType type = ModelType::kGplda;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> entries;

  void Add(std::string name, Eigen::MatrixXd value);
  /// Throws DataError naming the missing entry.
  const Eigen::MatrixXd &Get(const std::string &name) const;
  bool Has(const std::string &name) const;
};

void WriteContainer(const ModelContainer &container, const std::string &path);
ModelContainer ReadContainer(const std::string &path);

/// Reads only the header.
ModelType PeekModelType(const std::string &path);

void SaveGplda(const GpldaModel &model, const std::string &path);
GpldaModel LoadGplda(const std::string &path);

void SaveNplda(const NpldaModel &model, const std::string &path);
NpldaModel LoadNplda(const std::string &path);

void SaveTruth(const SynthTruth &truth, const std::string &path);
SynthTruth LoadTruth(const std::string &path);

}  // namespace svb

#endif  // SVB_MODEL_IO_H_
