// Copyright (c) 2026 The sheetscan Authors. All Rights Reserved.
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
#include "sheetscan/kv_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "sheetscan/error.hpp"

namespace sheetscan {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::vector<KeyValue> parse_kv(const std::string& text, const std::string& source) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    KeyValue kv{trim(t.substr(0, eq)), trim(t.substr(eq + 1)), lineno};
    if (kv.key.empty()) throw Error(ErrorCode::ParseError, source + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(kv.key).second) {
      throw Error(ErrorCode::ParseError, source + ":" + std::to_string(lineno) + ": duplicate key " + kv.key);
    }
    out.push_back(std::move(kv));
  }
  return out;
}

std::vector<KeyValue> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str(), path.string());
}

double parse_double(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const double v = std::stod(kv.value, &used);
    if (used == kv.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "line " + std::to_string(kv.line) + ": " + kv.key + " expects a number");
}

long long parse_int(const KeyValue& kv) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(kv.value, &used);
    if (used == kv.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::ParseError, "line " + std::to_string(kv.line) + ": " + kv.key + " expects an integer");
}

}  // namespace sheetscan
