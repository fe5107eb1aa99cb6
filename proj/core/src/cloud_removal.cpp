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
#include "sheetscan/cloud_removal.hpp"

#include <algorithm>

#include "sheetscan/error.hpp"
#include "sheetscan/image_io.hpp"

namespace sheetscan {

CloudMask::CloudMask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
  labels_.assign(std::size_t(width) * height, CloudLabel::Background);
}

std::int64_t CloudMask::count(CloudLabel l) const { return std::count(labels_.begin(), labels_.end(), l); }

namespace {

// Component pixels within `reach` steps of the enclosed interior. Strokes that
// merely touch the closed curve from outside, such as a connector tail, stay.
std::vector<Point> ring_pixels(const ContourNode& node, int reach, std::int64_t min_hole) {
  const int x0 = node.bbox.x0 - 1, y0 = node.bbox.y0 - 1;
  const int w = node.bbox.width() + 2, h = node.bbox.height() + 2;
  // 0 open background, 1 component, 2 outside, 3+k distance k from interior
  std::vector<std::uint8_t> cell(std::size_t(w) * h, 0);
  auto at = [&](int x, int y) -> std::uint8_t& { return cell[std::size_t(y) * w + x]; };
  for (const Point& p : node.pixels) at(p.x - x0, p.y - y0) = 1;
  std::vector<Point> stack{{0, 0}};
  at(0, 0) = 2;
  while (!stack.empty()) {
    const Point p = stack.back();
    stack.pop_back();
    const Point nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
    for (const Point& q : nb) {
      if (q.x < 0 || q.y < 0 || q.x >= w || q.y >= h || at(q.x, q.y) != 0) continue;
      at(q.x, q.y) = 2;
      stack.push_back(q);
    }
  }
  // Seed from enclosed regions large enough to be the interior; pinholes in
  // solid strokes are ignored.
  std::vector<Point> frontier;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (at(x, y) != 0) continue;
      std::vector<Point> region{{x, y}};
      at(x, y) = 3;
      for (std::size_t i = 0; i < region.size(); ++i) {
        const Point p = region[i];
        const Point nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
        for (const Point& q : nb) {
          if (q.x < 0 || q.y < 0 || q.x >= w || q.y >= h || at(q.x, q.y) != 0) continue;
          at(q.x, q.y) = 3;
          region.push_back(q);
        }
      }
      if (std::int64_t(region.size()) >= min_hole) frontier.insert(frontier.end(), region.begin(), region.end());
    }
  }
  std::vector<Point> ring;
  for (int k = 1; k <= reach && !frontier.empty(); ++k) {
    std::vector<Point> next;
    for (const Point& p : frontier) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = p.x + dx, qy = p.y + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h || at(qx, qy) != 1) continue;
          at(qx, qy) = std::uint8_t(3 + k);
          next.push_back({qx, qy});
          ring.push_back({qx + x0, qy + y0});
        }
      }
    }
    frontier = std::move(next);
  }
  return ring;
}

void mark_clouds(const ContourNode& node, const BinaryRaster& r, const GeometricCloudSegmenter::Params& p,
                 CloudMask& mask) {
  for (const auto& child : node.children) {
    if (int(child.children.size()) >= p.min_enclosed && child.bbox.area() >= p.min_cloud_area) {
      for (const Point& px : ring_pixels(child, p.ring_reach, p.min_hole_area)) {
        const bool edge = !r.at_or_zero(px.x - 1, px.y) || !r.at_or_zero(px.x + 1, px.y) ||
                          !r.at_or_zero(px.x, px.y - 1) || !r.at_or_zero(px.x, px.y + 1);
        mask.set(px.x, px.y, edge ? CloudLabel::Boundary : CloudLabel::Cloud);
      }
    }
    mark_clouds(child, r, p, mask);
  }
}

}  // namespace

CloudMask GeometricCloudSegmenter::segment(const BinaryRaster& r) const {
  CloudMask mask(r.width(), r.height());
  mark_clouds(contour_tree(r), r, params_, mask);
  return mask;
}

CloudMask segment_clouds(const BinaryRaster& r, const CloudSegmenter& seg) {
  CloudMask mask = seg.segment(r);
  if (mask.width() != r.width() || mask.height() != r.height()) {
    throw Error(ErrorCode::DimensionMismatch, "segmenter " + seg.id() + " returned a mask of the wrong size");
  }
  return mask;
}

BinaryRaster remove_clouds(const BinaryRaster& r, const CloudMask& mask, int median_window) {
  if (mask.width() != r.width() || mask.height() != r.height()) {
    throw Error(ErrorCode::DimensionMismatch, "cloud mask and raster differ in size");
  }
  BinaryRaster erased = r;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (mask.erasable(x, y)) erased.set(x, y, false);
    }
  }
  return median_filter(erased, median_window);
}

void write_cloud_mask_pgm(const CloudMask& mask, const std::filesystem::path& path) {
  GrayRaster img(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const CloudLabel l = mask.at(x, y);
      img.set(x, y, l == CloudLabel::Background ? 0 : l == CloudLabel::Boundary ? 128 : 255);
    }
  }
  write_pgm(img, path);
}

}  // namespace sheetscan
