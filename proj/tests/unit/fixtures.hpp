// Copyright 2026 The Stylegen Authors. All Rights Reserved.
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

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stylegen::testing {

inline std::string fixture_path(const std::string& name) { return std::string(STYLEGEN_FIXTURES) + "/" + name; }

/// Tab-separated rows of a fixture file; '#' lines and blank lines skipped.
inline std::vector<std::vector<std::string>> read_tsv(const std::string& name) {
  std::ifstream f(fixture_path(name));
  if (!f) throw std::runtime_error("missing fixture " + name);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(f, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    rows.push_back(std::move(cols));
  }
  return rows;
}

/// Whitespace-separated integers.
inline std::vector<int> ints(const std::string& s) {
  std::istringstream is(s);
  std::vector<int> out;
  for (int v; is >> v;) out.push_back(v);
  return out;
}

}  // namespace stylegen::testing
