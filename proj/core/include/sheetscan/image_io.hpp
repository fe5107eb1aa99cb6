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

#include "sheetscan/raster.hpp"

namespace sheetscan {

/// Reads an 8-bit grayscale page. Accepts PNG (any colour type, converted to
/// gray) and binary PGM (P5); the format is chosen from the file signature.
GrayRaster read_gray(const std::filesystem::path& path);

void write_pgm(const GrayRaster& img, const std::filesystem::path& path);
void write_png(const GrayRaster& img, const std::filesystem::path& path);

/// Ink as 255 on 0, matching the inverted in-memory convention.
GrayRaster to_gray(const BinaryRaster& r);
/// Any level >= 128 is ink.
BinaryRaster from_gray(const GrayRaster& img);

/// Debug round trip for binary rasters (ink = 255).
void write_binary_pgm(const BinaryRaster& r, const std::filesystem::path& path);
BinaryRaster read_binary_pgm(const std::filesystem::path& path);

/// Scan-like rendering: black ink on a white page.
GrayRaster to_scan(const BinaryRaster& r);

}  // namespace sheetscan
