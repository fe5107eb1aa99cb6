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

// Randomized library-vs-oracle equivalence runs shared by the unit tests and
// the acceptance binary.

#include <cstdint>
#include <string>

namespace sheetscan::suites {

struct SuiteResult {
  std::string name;
  int instances = 0;
  int failures = 0;
  std::string first_failure;

  bool ok() const { return failures == 0 && instances > 0; }
};

inline constexpr double kNccTolerance = 1e-9;

SuiteResult ncc(std::uint64_t seed, int instances);
SuiteResult components(std::uint64_t seed, int instances);
SuiteResult otsu(std::uint64_t seed, int instances);
SuiteResult ranking(std::uint64_t seed, int instances);
SuiteResult levenshtein(std::uint64_t seed, int instances);
SuiteResult zones(std::uint64_t seed, int instances);
SuiteResult split(std::uint64_t seed, int instances);

}  // namespace sheetscan::suites
