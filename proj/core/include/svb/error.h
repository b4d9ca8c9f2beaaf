// core/include/svb/error.h

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

#ifndef SVB_ERROR_H_
#define SVB_ERROR_H_

#include <stdexcept>
#include <string>

namespace svb {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed input: file format violations, dimension mismatch, unknown ids,
/// infeasible requests.
class DataError : public Error {
 public:
  explicit DataError(const std::string &what) : Error(what) {}
};

/// Numerical failure: singular matrices, degenerate (zero-norm) vectors,
/// non-finite losses, solver non-convergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string &what) : Error(what) {}
};

/// Invalid arguments or configuration values.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string &what) : Error(what) {}
};

}  // namespace svb

#endif  // SVB_ERROR_H_
