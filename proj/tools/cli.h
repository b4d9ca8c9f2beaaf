// tools/cli.h

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

#ifndef SVB_TOOLS_CLI_H_
#define SVB_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace svb {

/// Exit codes of the svb command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/**
   Runs one subcommand.  args[0] is the program name.  Reports go to `out`;
   the resolved configuration, progress and errors go to `err`.
*/
int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace svb

#endif  // SVB_TOOLS_CLI_H_
