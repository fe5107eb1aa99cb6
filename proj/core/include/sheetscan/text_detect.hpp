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

#include <string>
#include <vector>

#include "sheetscan/raster.hpp"

namespace sheetscan {

struct WindowSpec {
  int width = 480;
  int height = 360;
  double overlap_fraction = 0.5;

  int stride_x() const;
  int stride_y() const;
};

struct SheetWindow {
  BinaryRaster raster;
  Point offset;
};

struct TextBox {
  BBox bbox;  // sheet coordinates
  std::vector<int> source_windows;
};

/// Text-line proposal contract. Boxes are in the coordinates of the window passed in.
class TextDetector {
 public:
  virtual ~TextDetector() = default;
  virtual std::string id() const = 0;
  virtual std::vector<BBox> detect(const BinaryRaster& window) const = 0;
};

/// Baseline: bounding boxes of glyph-sized components are grown sideways by
/// half of dilation_gap, and boxes that then overlap form one group, so the
/// characters of a code fuse. Each group with enough members is a box. Components
/// larger than max_component_extent (connectors, leftovers of clouds) and specks
/// below min_component_pixels are not text.
class ProximityTextDetector final : public TextDetector {
 public:
  struct Params {
    int dilation_gap = 12;
    int min_chars = 1;
    int max_component_extent = 64;
    int min_component_pixels = 12;
  };

  ProximityTextDetector() = default;
  explicit ProximityTextDetector(Params p) : params_(p) {}

  std::string id() const override { return "proximity"; }
  std::vector<BBox> detect(const BinaryRaster& window) const override;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

/// Row-major tiling; the last row and column are clipped to the sheet.
std::vector<SheetWindow> window_sheet(const BinaryRaster& r, const WindowSpec& spec = {});

/// Per-window detection mapped to sheet coordinates. Boxes cut by an interior
/// window edge are discarded (the overlap guarantees another window holds them
/// whole); the rest are de-duplicated by unioning pairs with IoU >= 0.5, and
/// boxes lying inside another box are dropped.
std::vector<TextBox> detect_text(const BinaryRaster& r, const WindowSpec& spec, const TextDetector& det);

/// Transitive IoU >= threshold union, repeated to a fixpoint, sorted by (y0, x0).
std::vector<TextBox> merge_text_boxes(std::vector<TextBox> boxes, double iou_threshold = 0.5);

}  // namespace sheetscan
