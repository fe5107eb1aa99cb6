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
#include "sheetscan/assoc.hpp"

#include <algorithm>
#include <limits>

#include "sheetscan/error.hpp"

namespace sheetscan {

double tail_ray_entry(PointF from, PointF dir, const BBox& box, PointF* entry) {
  const double len = dir.norm();
  if (len == 0.0) return -1.0;
  const PointF unit = dir * (1.0 / len);
  const double t = ray_box_entry(from, unit, box);
  if (t >= 0.0 && entry != nullptr) *entry = from + unit * t;
  return t;
}

namespace {

struct Hit {
  int box = -1;
  double distance = std::numeric_limits<double>::infinity();
  PointF entry;
};

Hit first_box(PointF tail, PointF head, std::span<const TextBox> boxes, double max_distance) {
  Hit best;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    PointF entry;
    const double t = tail_ray_entry(tail, tail - head, boxes[i].bbox, &entry);
    if (t < 0.0 || t > max_distance) continue;
    if (t < best.distance) best = {int(i), t, entry};
  }
  return best;
}

}  // namespace

AssocResult associate_and_filter(std::span<const Connector> connectors, std::span<const TextBox> boxes,
                                 const AssocParams& params) {
  AssocResult out;
  for (const Connector& c : connectors) {
    Hit hit = first_box(c.tail, c.head, boxes, params.max_distance);
    Connector chosen = c;
    if (!c.oriented) {
      const Hit flipped = first_box(c.head, c.tail, boxes, params.max_distance);
      if (flipped.distance < hit.distance) {
        hit = flipped;
        std::swap(chosen.head, chosen.tail);
      }
    }
    if (hit.box < 0) {
      out.dropped.push_back(c);
      continue;
    }
    out.candidates.push_back({chosen, hit.box, hit.distance, hit.entry});
  }
  return out;
}

std::vector<ConnectedComponent> components_in_box(std::span<const ConnectedComponent> components, const BBox& box,
                                                  int min_pixels, int max_extent) {
  std::vector<ConnectedComponent> out;
  for (const auto& c : components) {
    if (!box.contains(c.bbox)) continue;
    if (int(c.pixels.size()) < min_pixels) continue;
    if (std::max(c.bbox.width(), c.bbox.height()) > max_extent) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<TextPatch> split_box(const TextBox& box, std::span<const Connector> connectors,
                                 std::span<const ConnectedComponent> components, int max_iters, int box_index) {
  const std::size_t k = connectors.size();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "split_box needs at least one connector");
  if (k > components.size()) {
    throw Error(ErrorCode::SplitInfeasible, std::to_string(k) + " connectors but only " +
                                                std::to_string(components.size()) + " components");
  }
  std::vector<PointF> means(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Connector& c = connectors[i];
    PointF entry;
    if (tail_ray_entry(c.tail, c.tail - c.head, box.bbox, &entry) < 0.0) {
      // Ray misses: fall back to the box point nearest the tail.
      entry = {std::clamp(c.tail.x, double(box.bbox.x0), double(box.bbox.x1)),
               std::clamp(c.tail.y, double(box.bbox.y0), double(box.bbox.y1))};
    }
    means[i] = entry;
  }

  std::vector<std::size_t> assign(components.size(), k);
  for (int iter = 0; iter < std::max(1, max_iters); ++iter) {
    bool changed = false;
    for (std::size_t j = 0; j < components.size(); ++j) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < k; ++i) {
        const PointF d = components[j].centroid - means[i];
        const double d2 = dot(d, d);
        if (d2 < best_d) {
          best_d = d2;
          best = i;
        }
      }
      if (assign[j] != best) {
        assign[j] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<PointF> sum(k);
    std::vector<int> count(k, 0);
    for (std::size_t j = 0; j < components.size(); ++j) {
      sum[assign[j]] = sum[assign[j]] + components[j].centroid;
      ++count[assign[j]];
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (count[i] > 0) means[i] = sum[i] * (1.0 / count[i]);
    }
  }

  std::vector<TextPatch> patches(k);
  for (std::size_t j = 0; j < components.size(); ++j) {
    TextPatch& p = patches[assign[j]];
    p.bbox = p.components.empty() ? components[j].bbox : p.bbox.united(components[j].bbox);
    p.components.push_back(components[j]);
  }
  for (auto& p : patches) {
    if (p.components.empty()) throw Error(ErrorCode::SplitInfeasible, "a connector seed attracted no components");
    p.parent_box = box_index;
  }
  return patches;
}

}  // namespace sheetscan
