// Copyright 2026-present the gsq project
//
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gsq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/**
 * The gsq command line. `args` excludes the program name. Subcommands:
 * init, train, encode, decode, eval, sweep, dist-stats, fit-scaling.
 *
 * Every subcommand accepts --config FILE with flat `key = value` lines whose
 * keys are long option names. Flags on the command line win over the file,
 * the file wins over the GSQ_SEED environment variable, and that wins over
 * built-in defaults.
 *
 * Returns kExitOk only when the requested output was written and verified,
 * kExitUsage for invalid invocations and kExitFailure otherwise.
 */
int
run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gsq
