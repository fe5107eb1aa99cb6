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
#include "sheetscan/error.hpp"

namespace sheetscan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::SplitInfeasible: return "SplitInfeasible";
    case ErrorCode::BlankSegment: return "BlankSegment";
    case ErrorCode::NoZoneHit: return "NoZoneHit";
    case ErrorCode::GenerationInfeasible: return "GenerationInfeasible";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::IdMismatch: return "IdMismatch";
  }
  return "Unknown";
}

}  // namespace sheetscan
