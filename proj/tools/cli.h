/*
 * Copyright 2026 The Swivel Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// The `swivel` command-line tool: vocab, cooc, shard, train, export, eval and
// neighbors subcommands over the core library.

#ifndef SWIVEL_TOOLS_CLI_H_
#define SWIVEL_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace swivel::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Runs one command line (args[0] is the program name). Reports go to `out`;
// resolved configuration, progress and diagnostics go to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace swivel::cli

#endif  // SWIVEL_TOOLS_CLI_H_
