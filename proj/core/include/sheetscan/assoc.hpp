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

#include <span>
#include <vector>

#include "sheetscan/connector_detect.hpp"
#include "sheetscan/text_detect.hpp"

namespace sheetscan {

struct TextPatch {
  BBox bbox;
  std::vector<ConnectedComponent> components;
  int parent_box = -1;
};

struct AssocParams {
  double max_distance = 150.0;  // px along the extrapolated tail ray
  int kmeans_max_iters = 100;
};

struct AssocCandidate {
  /// Tail set to the endpoint whose backward ray found the box.
  Connector connector;
  int box = -1;
  double tail_distance = 0.0;
  /// Where the backward ray enters the box.
  PointF entry;
};

struct AssocResult {
  std::vector<AssocCandidate> candidates;
  std::vector<Connector> dropped;
};

/// Entry distance and point of the ray from \p from in direction \p dir into
/// \p box; distance < 0 when it misses.
double tail_ray_entry(PointF from, PointF dir, const BBox& box, PointF* entry = nullptr);

/// Extends each connector backwards from its tail and takes the first text box
/// hit within max_distance. Unoriented connectors try both ends and keep the
/// shorter hit. Connectors that hit nothing are dropped.
AssocResult associate_and_filter(std::span<const Connector> connectors, std::span<const TextBox> boxes,
                                 const AssocParams& params = {});

/// Components of the sheet that belong to a text box: fully inside it and
/// glyph-sized.
std::vector<ConnectedComponent> components_in_box(std::span<const ConnectedComponent> components, const BBox& box,
                                                  int min_pixels = 1, int max_extent = 1 << 30);

/// K-means over component centroids with one cluster per connector, seeded at
/// each connector's tail-ray entry point. Patch i belongs to connectors[i].
/// Throws SplitInfeasible when there are fewer components than connectors or
/// a seed ends with an empty cluster.
std::vector<TextPatch> split_box(const TextBox& box, std::span<const Connector> connectors,
                                 std::span<const ConnectedComponent> components, int max_iters = 100,
                                 int box_index = -1);

}  // namespace sheetscan
