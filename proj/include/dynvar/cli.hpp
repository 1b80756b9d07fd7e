// Copyright 2026 The dynvar authors
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

namespace dynvar {

// Command-line entry point, exposed as a library call so the behaviour is
// testable in-process. args excludes the program name.
//
// Exit codes: 0 success, 1 file or usage errors, 2 generator fails a gate
// (domain, ellipticity, exactness, state validity), 3 internal oracle
// disagreement, 4 certified non-conjugacy, 5 certificate rejected or search
// inconclusive.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dynvar
