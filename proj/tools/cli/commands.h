// tools/cli/commands.h

// Copyright 2026  The ncm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef NCM_TOOLS_CLI_COMMANDS_H_
#define NCM_TOOLS_CLI_COMMANDS_H_

#include <ostream>

namespace ncm::cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Entry point of the `ncm` tool. Results go to `out`, progress and errors to
// `err`.
int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace ncm::cli

#endif  // NCM_TOOLS_CLI_COMMANDS_H_
