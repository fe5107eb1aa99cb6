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
#include "sheetscan/text_detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sheetscan/error.hpp"

namespace sheetscan {

int WindowSpec::stride_x() const { return std::max(1, int(std::floor(width * (1.0 - overlap_fraction)))); }
int WindowSpec::stride_y() const { return std::max(1, int(std::floor(height * (1.0 - overlap_fraction)))); }

namespace {

std::vector<int> offsets(int extent, int size, int stride) {
  std::vector<int> out{0};
  while (out.back() + size < extent) out.push_back(out.back() + stride);
  return out;
}

}  // namespace

std::vector<SheetWindow> window_sheet(const BinaryRaster& r, const WindowSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0 || spec.overlap_fraction < 0.0 || spec.overlap_fraction >= 1.0) {
    throw Error(ErrorCode::InvalidArgument, "window size must be positive and overlap in [0, 1)");
  }
  std::vector<SheetWindow> out;
  for (int y : offsets(r.height(), spec.height, spec.stride_y())) {
    for (int x : offsets(r.width(), spec.width, spec.stride_x())) {
      const BBox box{x, y, std::min(r.width(), x + spec.width) - 1, std::min(r.height(), y + spec.height) - 1};
      out.push_back({r.crop(box), {x, y}});
    }
  }
  return out;
}

std::vector<BBox> ProximityTextDetector::detect(const BinaryRaster& window) const {
  const auto comps = connected_components(window, Connectivity::Eight);
  std::vector<BBox> glyphs;
  for (const auto& c : comps) {
    if (int(c.pixels.size()) < params_.min_component_pixels) continue;
    if (std::max(c.bbox.width(), c.bbox.height()) > params_.max_component_extent) continue;
    glyphs.push_back(c.bbox);
  }
  if (glyphs.empty()) return {};
  // Boxes grown sideways by half the gap; overlapping grown boxes share a group.
  const int half = (params_.dilation_gap + 1) / 2;
  const std::size_t n = glyphs.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const BBox gi{glyphs[i].x0 - half, glyphs[i].y0, glyphs[i].x1 + half, glyphs[i].y1};
    for (std::size_t j = i + 1; j < n; ++j) {
      const BBox gj{glyphs[j].x0 - half, glyphs[j].y0, glyphs[j].x1 + half, glyphs[j].y1};
      if (gi.intersects(gj)) parent[find(j)] = find(i);
    }
  }
  std::vector<int> members(n, 0);
  std::vector<BBox> hull(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t g = find(i);
    hull[g] = members[g] == 0 ? glyphs[i] : hull[g].united(glyphs[i]);
    ++members[g];
  }
  std::vector<BBox> out;
  for (std::size_t g = 0; g < n; ++g) {
    if (members[g] >= std::max(1, params_.min_chars)) out.push_back(hull[g]);
  }
  return out;
}

std::vector<TextBox> merge_text_boxes(std::vector<TextBox> boxes, double iou_threshold) {
  bool changed = true;
  while (changed) {
    changed = false;
    const std::size_t n = boxes.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (find(i) != find(j) && iou(boxes[i].bbox, boxes[j].bbox) >= iou_threshold) {
          parent[find(j)] = find(i);
          changed = true;
        }
      }
    }
    if (!changed) break;
    std::vector<TextBox> next;
    std::vector<int> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t root = find(i);
      if (slot[root] < 0) {
        slot[root] = int(next.size());
        next.push_back(boxes[i]);
      } else {
        TextBox& t = next[std::size_t(slot[root])];
        t.bbox = t.bbox.united(boxes[i].bbox);
        t.source_windows.insert(t.source_windows.end(), boxes[i].source_windows.begin(),
                                boxes[i].source_windows.end());
      }
    }
    boxes = std::move(next);
  }
  for (auto& b : boxes) {
    std::sort(b.source_windows.begin(), b.source_windows.end());
    b.source_windows.erase(std::unique(b.source_windows.begin(), b.source_windows.end()), b.source_windows.end());
  }
  std::sort(boxes.begin(), boxes.end(), [](const TextBox& a, const TextBox& b) {
    if (a.bbox.y0 != b.bbox.y0) return a.bbox.y0 < b.bbox.y0;
    if (a.bbox.x0 != b.bbox.x0) return a.bbox.x0 < b.bbox.x0;
    if (a.bbox.y1 != b.bbox.y1) return a.bbox.y1 < b.bbox.y1;
    return a.bbox.x1 < b.bbox.x1;
  });
  return boxes;
}

std::vector<TextBox> detect_text(const BinaryRaster& r, const WindowSpec& spec, const TextDetector& det) {
  const auto windows = window_sheet(r, spec);
  std::vector<TextBox> raw;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    const int ww = win.raster.width();
    const int wh = win.raster.height();
    for (BBox b : det.detect(win.raster)) {
      const bool cut_left = b.x0 <= 0 && win.offset.x > 0;
      const bool cut_top = b.y0 <= 0 && win.offset.y > 0;
      const bool cut_right = b.x1 >= ww - 1 && win.offset.x + ww < r.width();
      const bool cut_bottom = b.y1 >= wh - 1 && win.offset.y + wh < r.height();
      if (cut_left || cut_top || cut_right || cut_bottom) continue;
      b = {b.x0 + win.offset.x, b.y0 + win.offset.y, b.x1 + win.offset.x, b.y1 + win.offset.y};
      raw.push_back({b, {int(w)}});
    }
  }
  auto merged = merge_text_boxes(std::move(raw), 0.5);
  // A window that saw only part of a line reports a box inside the full one.
  std::vector<TextBox> out;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    bool inner = false;
    for (std::size_t j = 0; j < merged.size() && !inner; ++j) {
      inner = j != i && merged[j].bbox.contains(merged[i].bbox) && merged[j].bbox != merged[i].bbox;
    }
    if (!inner) out.push_back(std::move(merged[i]));
  }
  return out;
}

}  // namespace sheetscan
