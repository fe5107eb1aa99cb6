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
#include <span>
#include <vector>

#include "sheetscan/geometry.hpp"

namespace sheetscan {

/// Page bitmap in the inverted convention: a stored 1 is ink (white on black).
class BinaryRaster {
 public:
  BinaryRaster(int width, int height);
  BinaryRaster(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  bool at_or_zero(int x, int y) const { return in_bounds(x, y) && at(x, y); }
  void set(int x, int y, bool ink = true) { bits_[index(x, y)] = ink ? 1 : 0; }

  std::int64_t count() const;
  BBox bounds() const { return {0, 0, width_ - 1, height_ - 1}; }
  BinaryRaster crop(const BBox& box) const;
  /// Ink of \p other ORed in with its top-left at \p at; out-of-range pixels are skipped.
  void paste(const BinaryRaster& other, Point at);

  friend bool operator==(const BinaryRaster&, const BinaryRaster&) = default;

 private:
  std::size_t index(int x, int y) const { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

class GrayRaster {
 public:
  GrayRaster(int width, int height, std::uint8_t fill = 0);
  GrayRaster(int width, int height, std::vector<std::uint8_t> levels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const std::uint8_t> levels() const { return levels_; }
  std::uint8_t at(int x, int y) const { return levels_[std::size_t(y) * width_ + x]; }
  void set(int x, int y, std::uint8_t v) { levels_[std::size_t(y) * width_ + x] = v; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> levels_;
};

struct ConnectedComponent {
  int id = 0;
  std::vector<Point> pixels;
  BBox bbox;
  PointF centroid;
};

struct ContourNode {
  /// Outer boundary as a closed pixel-centre polygon (Moore trace order).
  std::vector<Point> contour;
  BBox bbox;
  /// Pixels of the foreground region whose outer boundary this is; empty for the root.
  std::vector<Point> pixels;
  int depth = 0;
  std::vector<ContourNode> children;
};

enum class Connectivity { Four = 4, Eight = 8 };

/// Otsu threshold on the 256-bin histogram. Pixels <= threshold are the dark
/// class. Returns -1 when no split has positive between-class variance.
int otsu_threshold(const GrayRaster& img);

/// Inverted Otsu binarization: dark ink becomes foreground.
BinaryRaster binarize_otsu(const GrayRaster& img);

std::vector<ConnectedComponent> connected_components(const BinaryRaster& r,
                                                     Connectivity connectivity = Connectivity::Eight);

/// Builds a component from an arbitrary nonempty pixel list (bbox, centroid).
ConnectedComponent make_component(std::vector<Point> pixels, int id = 0);

ContourNode contour_tree(const BinaryRaster& r);

BinaryRaster median_filter(const BinaryRaster& r, int window);

}  // namespace sheetscan
