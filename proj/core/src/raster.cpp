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
#include "sheetscan/raster.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <utility>

#include "sheetscan/error.hpp"

namespace sheetscan {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
  }
}

// Clockwise from west; Moore tracing relies on this order.
constexpr std::array<Point, 8> kRing = {{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

struct Labelling {
  std::vector<int> labels;  // -1 where the pixel is not part of any region
  std::vector<ConnectedComponent> components;
};

// Labels pixels whose value equals \p ink. Components come out sorted by
// (bbox.y0, bbox.x0, first scan pixel) with ids equal to their index.
Labelling label_regions(const BinaryRaster& r, bool ink, Connectivity connectivity) {
  const int w = r.width();
  const int h = r.height();
  Labelling out;
  out.labels.assign(std::size_t(w) * h, -1);
  std::vector<ConnectedComponent> found;
  std::vector<Point> stack;
  const bool eight = connectivity == Connectivity::Eight;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = std::size_t(y) * w + x;
      if (r.at(x, y) != ink || out.labels[idx] >= 0) continue;
      const int label = int(found.size());
      std::vector<Point> pixels;
      out.labels[idx] = label;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        pixels.push_back(p);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (!r.in_bounds(nx, ny) || r.at(nx, ny) != ink) continue;
            const std::size_t nidx = std::size_t(ny) * w + nx;
            if (out.labels[nidx] >= 0) continue;
            out.labels[nidx] = label;
            stack.push_back({nx, ny});
          }
        }
      }
      found.push_back(make_component(std::move(pixels), label));
    }
  }
  // Discovery order is scan order of the first pixel; re-sort by bbox corner.
  std::vector<int> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const BBox& ba = found[a].bbox;
    const BBox& bb = found[b].bbox;
    return ba.y0 != bb.y0 ? ba.y0 < bb.y0 : ba.x0 < bb.x0;
  });
  std::vector<int> remap(found.size());
  out.components.reserve(found.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    remap[order[i]] = int(i);
    out.components.push_back(std::move(found[order[i]]));
    out.components.back().id = int(i);
  }
  for (int& l : out.labels) {
    if (l >= 0) l = remap[l];
  }
  return out;
}

std::vector<Point> trace_outer_boundary(const BinaryRaster& r, Point start) {
  std::vector<Point> contour{start};
  // The west neighbour of the first scan pixel is background (or off-page).
  int back = 0;
  Point cur = start;
  Point first_move{-1, -1};
  const std::size_t limit = std::size_t(r.width()) * r.height() * 4 + 16;
  for (std::size_t guard = 0; guard < limit; ++guard) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (r.at_or_zero(cur.x + kRing[d].x, cur.y + kRing[d].y)) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const Point next{cur.x + kRing[found].x, cur.y + kRing[found].y};
    if (cur == start) {
      if (first_move.x < 0) {
        first_move = next;
      } else if (next == first_move) {
        contour.pop_back();  // start was appended again on arrival
        break;
      }
    }
    // New backtrack: the neighbour examined just before `found`, seen from next.
    const Point prev{cur.x + kRing[(found + 7) % 8].x, cur.y + kRing[(found + 7) % 8].y};
    cur = next;
    contour.push_back(cur);
    for (int d = 0; d < 8; ++d) {
      if (cur.x + kRing[d].x == prev.x && cur.y + kRing[d].y == prev.y) {
        back = d;
        break;
      }
    }
  }
  return contour;
}

ContourNode build_node(int comp, const std::vector<ConnectedComponent>& comps,
                       const std::vector<std::vector<int>>& children, const BinaryRaster& r, int depth) {
  ContourNode node;
  node.depth = depth;
  node.bbox = comps[comp].bbox;
  node.pixels = comps[comp].pixels;
  node.contour = trace_outer_boundary(r, comps[comp].pixels.front());
  for (int c : children[comp]) node.children.push_back(build_node(c, comps, children, r, depth + 1));
  return node;
}

}  // namespace

BinaryRaster::BinaryRaster(int width, int height) : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(std::size_t(width) * height, 0);
}

BinaryRaster::BinaryRaster(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height);
  if (bits_.size() != std::size_t(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "bit count does not match width x height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::int64_t BinaryRaster::count() const {
  return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

BinaryRaster BinaryRaster::crop(const BBox& box) const {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 >= width_ || box.y1 >= height_ || box.x0 > box.x1 ||
      box.y0 > box.y1) {
    throw Error(ErrorCode::OutOfBounds, "crop box outside raster");
  }
  BinaryRaster out(box.width(), box.height());
  for (int y = box.y0; y <= box.y1; ++y) {
    for (int x = box.x0; x <= box.x1; ++x) {
      if (at(x, y)) out.set(x - box.x0, y - box.y0);
    }
  }
  return out;
}

void BinaryRaster::paste(const BinaryRaster& other, Point at_pos) {
  for (int y = 0; y < other.height(); ++y) {
    for (int x = 0; x < other.width(); ++x) {
      if (other.at(x, y) && in_bounds(x + at_pos.x, y + at_pos.y)) set(x + at_pos.x, y + at_pos.y);
    }
  }
}

GrayRaster::GrayRaster(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  levels_.assign(std::size_t(width) * height, fill);
}

GrayRaster::GrayRaster(int width, int height, std::vector<std::uint8_t> levels)
    : width_(width), height_(height), levels_(std::move(levels)) {
  check_dims(width, height);
  if (levels_.size() != std::size_t(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "level count does not match width x height");
  }
}

namespace {

__extension__ typedef unsigned __int128 u128;
__extension__ typedef __int128 i128;

// a * b as a 192-bit value {hi, lo}.
std::pair<std::uint64_t, u128> mul_wide(u128 a, std::uint64_t b) {
  const u128 lo = u128(std::uint64_t(a)) * b;
  const u128 hi = u128(std::uint64_t(a >> 64)) * b + (lo >> 64);
  return {std::uint64_t(hi >> 64), (hi << 64) | u128(std::uint64_t(lo))};
}

// Exact a/b > c/d for the between-class variance fractions below.
bool fraction_greater(u128 a, std::uint64_t b, u128 c, std::uint64_t d) { return mul_wide(a, d) > mul_wide(c, b); }

}  // namespace

int otsu_threshold(const GrayRaster& img) {
  std::array<std::int64_t, 256> hist{};
  for (auto v : img.levels()) ++hist[v];
  const std::int64_t total = std::int64_t(img.levels().size());
  std::int64_t sum_all = 0;
  for (int v = 0; v < 256; ++v) sum_all += hist[v] * v;

  // n0 n1 (mu0 - mu1)^2 = (n1 s0 - n0 s1)^2 / (n0 n1), compared exactly.
  int best_t = -1;
  u128 best_num = 0;
  std::uint64_t best_den = 1;
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  for (int t = 0; t < 255; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const i128 diff = i128(n1) * s0 - i128(n0) * (sum_all - s0);
    const u128 mag = u128(diff < 0 ? -diff : diff);
    const u128 num = mag * mag;
    const std::uint64_t den = std::uint64_t(n0) * std::uint64_t(n1);
    if (fraction_greater(num, den, best_num, best_den)) {  // strict: ties keep the smallest threshold
      best_num = num;
      best_den = den;
      best_t = t;
    }
  }
  return best_t;
}

BinaryRaster binarize_otsu(const GrayRaster& img) {
  const int t = otsu_threshold(img);
  BinaryRaster out(img.width(), img.height());
  if (t < 0) return out;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.at(x, y) <= t) out.set(x, y);
    }
  }
  return out;
}

ConnectedComponent make_component(std::vector<Point> pixels, int id) {
  if (pixels.empty()) throw Error(ErrorCode::InvalidArgument, "component needs at least one pixel");
  std::sort(pixels.begin(), pixels.end(),
            [](Point a, Point b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  ConnectedComponent c;
  c.id = id;
  c.bbox = {pixels[0].x, pixels[0].y, pixels[0].x, pixels[0].y};
  double sx = 0.0;
  double sy = 0.0;
  for (const Point& p : pixels) {
    c.bbox.x0 = std::min(c.bbox.x0, p.x);
    c.bbox.x1 = std::max(c.bbox.x1, p.x);
    c.bbox.y0 = std::min(c.bbox.y0, p.y);
    c.bbox.y1 = std::max(c.bbox.y1, p.y);
    sx += p.x;
    sy += p.y;
  }
  c.centroid = {sx / double(pixels.size()), sy / double(pixels.size())};
  c.pixels = std::move(pixels);
  return c;
}

std::vector<ConnectedComponent> connected_components(const BinaryRaster& r, Connectivity connectivity) {
  return label_regions(r, true, connectivity).components;
}

ContourNode contour_tree(const BinaryRaster& r) {
  const int w = r.width();
  const Labelling fg = label_regions(r, true, Connectivity::Eight);
  // Background regions use the dual connectivity so that 8-connected ink closes them.
  const Labelling bg = label_regions(r, false, Connectivity::Four);

  std::vector<char> bg_touches_border(bg.components.size(), 0);
  for (const auto& c : bg.components) {
    if (c.bbox.x0 == 0 || c.bbox.y0 == 0 || c.bbox.x1 == w - 1 || c.bbox.y1 == r.height() - 1) {
      bg_touches_border[c.id] = 1;
    }
  }

  const int n = int(fg.components.size());
  std::vector<std::vector<int>> children(n);
  std::vector<int> roots;
  for (const auto& comp : fg.components) {
    // pixels are in scan order, so the first one is on the top row of the region
    // and the pixel above it lies in the background region that surrounds it.
    const Point top = comp.pixels.front();
    int parent = -1;
    if (top.y > 0) {
      const int around = bg.labels[std::size_t(top.y - 1) * w + top.x];
      if (!bg_touches_border[around]) {
        const Point hole_top = bg.components[around].pixels.front();
        parent = fg.labels[std::size_t(hole_top.y - 1) * w + hole_top.x];
      }
    }
    if (parent < 0) {
      roots.push_back(comp.id);
    } else {
      children[parent].push_back(comp.id);
    }
  }
  // Component ids already follow (y0, x0), so child lists are ordered.
  ContourNode root;
  root.depth = 0;
  root.bbox = r.bounds();
  root.contour = {{0, 0}, {w - 1, 0}, {w - 1, r.height() - 1}, {0, r.height() - 1}};
  for (int c : roots) root.children.push_back(build_node(c, fg.components, children, r, 1));
  return root;
}

BinaryRaster median_filter(const BinaryRaster& r, int window) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median window must be odd and >= 3");
  }
  const int w = r.width();
  const int h = r.height();
  std::vector<std::int32_t> integral(std::size_t(w + 1) * (h + 1), 0);
  auto I = [&](int x, int y) -> std::int32_t& { return integral[std::size_t(y) * (w + 1) + x]; };
  for (int y = 0; y < h; ++y) {
    std::int32_t row = 0;
    for (int x = 0; x < w; ++x) {
      row += r.at(x, y) ? 1 : 0;
      I(x + 1, y + 1) = I(x + 1, y) + row;
    }
  }
  const int half = window / 2;
  BinaryRaster out(w, h);
  for (int y = 0; y < h; ++y) {
    const int ya = std::max(0, y - half);
    const int yb = std::min(h - 1, y + half);
    for (int x = 0; x < w; ++x) {
      const int xa = std::max(0, x - half);
      const int xb = std::min(w - 1, x + half);
      const std::int32_t ink = I(xb + 1, yb + 1) - I(xa, yb + 1) - I(xb + 1, ya) + I(xa, ya);
      const std::int32_t area = (xb - xa + 1) * (yb - ya + 1);
      if (2 * ink > area) out.set(x, y);
    }
  }
  return out;
}

}  // namespace sheetscan
