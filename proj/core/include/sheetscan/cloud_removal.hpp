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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sheetscan/raster.hpp"

namespace sheetscan {

enum class CloudLabel : std::uint8_t { Background = 0, Boundary = 1, Cloud = 2 };

class CloudMask {
 public:
  CloudMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  CloudLabel at(int x, int y) const { return labels_[std::size_t(y) * width_ + x]; }
  void set(int x, int y, CloudLabel l) { labels_[std::size_t(y) * width_ + x] = l; }
  bool erasable(int x, int y) const { return at(x, y) != CloudLabel::Background; }
  std::int64_t count(CloudLabel l) const;

 private:
  int width_;
  int height_;
  std::vector<CloudLabel> labels_;
};

/// Three-class segmentation contract for dialogue clouds. Implementations must
/// be immutable once built so one instance can serve concurrent sheets.
class CloudSegmenter {
 public:
  virtual ~CloudSegmenter() = default;
  virtual std::string id() const = 0;
  virtual CloudMask segment(const BinaryRaster& r) const = 0;
};

/// Marks a region as cloud when it is a closed curve enclosing at least
/// `min_enclosed` other components and its bbox covers `min_cloud_area` px^2.
/// Only stroke pixels near the enclosed interior are marked, so lines attached
/// from outside survive. Pixels touching background are boundary, the rest cloud.
class GeometricCloudSegmenter final : public CloudSegmenter {
 public:
  struct Params {
    std::int64_t min_cloud_area = 1500;
    int min_enclosed = 2;
    /// Stroke depth, in 8-connected steps from the interior, that counts as the curve.
    int ring_reach = 6;
    /// Enclosed background regions smaller than this are treated as stroke pinholes.
    std::int64_t min_hole_area = 64;
  };

  GeometricCloudSegmenter() = default;
  explicit GeometricCloudSegmenter(Params p) : params_(p) {}

  std::string id() const override { return "geometric"; }
  CloudMask segment(const BinaryRaster& r) const override;

 private:
  Params params_;
};

CloudMask segment_clouds(const BinaryRaster& r, const CloudSegmenter& seg);

/// Erases cloud and boundary pixels, then median-filters the result.
BinaryRaster remove_clouds(const BinaryRaster& r, const CloudMask& mask, int median_window = 3);

/// Debug dump: 0 background, 128 boundary, 255 cloud.
void write_cloud_mask_pgm(const CloudMask& mask, const std::filesystem::path& path);

}  // namespace sheetscan
