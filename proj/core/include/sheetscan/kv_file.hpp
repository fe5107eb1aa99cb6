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
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sheetscan {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Flat `key=value` text. Blank lines and lines starting with '#' are skipped;
/// whitespace around keys and values is trimmed. Duplicate keys are an error.
std::vector<KeyValue> parse_kv(const std::string& text, const std::string& source = "<string>");
std::vector<KeyValue> read_kv_file(const std::filesystem::path& path);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

double parse_double(const KeyValue& kv);
long long parse_int(const KeyValue& kv);

}  // namespace sheetscan
