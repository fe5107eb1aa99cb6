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

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>

namespace sheetscan {

struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointF {
  double x = 0.0;
  double y = 0.0;

  PointF() = default;
  PointF(double px, double py) : x(px), y(py) {}
  explicit PointF(Point p) : x(p.x), y(p.y) {}

  PointF operator+(PointF o) const { return {x + o.x, y + o.y}; }
  PointF operator-(PointF o) const { return {x - o.x, y - o.y}; }
  PointF operator*(double s) const { return {x * s, y * s}; }
  double norm() const { return std::hypot(x, y); }

  friend bool operator==(const PointF&, const PointF&) = default;
};

inline double dot(PointF a, PointF b) { return a.x * b.x + a.y * b.y; }
inline double cross(PointF a, PointF b) { return a.x * b.y - a.y * b.x; }
inline double distance(PointF a, PointF b) { return (a - b).norm(); }

/// Reading-order comparison used for every deterministic tie-break: (y, x).
inline bool yx_less(PointF a, PointF b) { return a.y < b.y || (a.y == b.y && a.x < b.x); }

/// Inclusive pixel box: a single pixel at (x, y) is {x, y, x, y}.
struct BBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  std::int64_t area() const { return std::int64_t(width()) * height(); }
  PointF center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }

  bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool contains(const BBox& o) const {
    return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
  }
  bool intersects(const BBox& o) const {
    return o.x0 <= x1 && x0 <= o.x1 && o.y0 <= y1 && y0 <= o.y1;
  }
  BBox expanded(int margin) const {
    return {x0 - margin, y0 - margin, x1 + margin, y1 + margin};
  }
  BBox united(const BBox& o) const {
    return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline double iou(const BBox& a, const BBox& b) {
  if (!a.intersects(b)) return 0.0;
  BBox in{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  const double inter = double(in.area());
  return inter / (double(a.area()) + double(b.area()) - inter);
}

/// Distance along the ray origin + t * dir (t >= 0) at which it first meets the
/// closed box, or a negative value when it misses. Origins inside give 0.
double ray_box_entry(PointF origin, PointF dir, const BBox& box);

}  // namespace sheetscan
