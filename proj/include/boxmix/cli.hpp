// Copyright 2026 The BoxMix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace boxmix {

/// Process exit codes; stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitIo = 4,
  kExitInternal = 5,
};

/// Parses argv, runs the selected subcommand and maps failures onto
/// ExitCode. Normal output goes to `out`, diagnostics to `err`.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args exclude the program name.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 50-bin histogram of n Beta(alpha, alpha) draws over [0, 1].
std::vector<std::uint64_t> beta_histogram(double alpha, std::uint64_t n, std::uint64_t seed, int bins = 50);

}  // namespace boxmix
