// Copyright 2026 The Lacuna Authors
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

// Flat key=value run configuration merged under command-line flags.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lacuna::cli {

// Lines "key = value"; '#' starts a comment line; keys are case-sensitive and
// '_' and '-' are interchangeable. Throws MissingInput / FormatError.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

// Returns argv with "--key=value" inserted after the subcommand name for
// every config key the subcommand accepts and the command line does not
// already set. `accepts` maps an option name (without dashes) to whether it
// exists for the subcommand.
template <typename Accepts>
std::vector<std::string> merge_config(const std::vector<std::string>& args,
                                      std::size_t subcommand_index,
                                      const std::map<std::string, std::string>& config,
                                      Accepts&& accepts) {
  auto given = [&](const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(subcommand_index) + 1);
  for (const auto& [key, value] : config) {
    if (!accepts(key) || given(key)) continue;
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + static_cast<long>(subcommand_index) + 1, args.end());
  return out;
}

}  // namespace lacuna::cli
