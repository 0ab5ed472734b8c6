// Copyright 2026 The tokenscale Authors. All Rights Reserved.
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

#ifndef TOKENSCALE_CLI_H_
#define TOKENSCALE_CLI_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tokenscale {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitInfeasible = 2,  // also underdetermined fits and flat laws
  kExitIo = 3,          // unreadable files and parse failures
};

// Number with an optional magnitude suffix: k, m, b (or g), t.
// "7b" -> 7e9, "1.5e12" -> 1.5e12. Throws ValidationError.
double ParseQuantity(std::string_view text);

// Comma-separated positive integers, e.g. "1,4,16".
std::vector<std::int64_t> ParseIntList(std::string_view text);

// lo:hi:step, inclusive of hi when reachable.
std::vector<std::int64_t> ParseRange(std::string_view text);

// Entry point shared by the binary and the tests. Results go to `out`; any
// failure prints one diagnostic line to `err` and returns a nonzero code.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace tokenscale

#endif  // TOKENSCALE_CLI_H_
