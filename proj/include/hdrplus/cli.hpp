// Copyright (c) 2026 The hdrplus-burst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
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

namespace hdrplus {

/// Command-line entry point. Subcommands: merge, finish, full, synthbench.
/// Returns 0 on success, 1 when processing fails, 2 on bad arguments.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// argv[0] is supplied by the caller.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdrplus
