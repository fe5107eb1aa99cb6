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
#include <optional>
#include <string>
#include <vector>

#include "sheetscan/geometry.hpp"

namespace sheetscan {

struct ZonePolygon {
  std::string zone_id;
  std::vector<Point> vertices;  // template-relative
};

struct ZoneMap {
  std::string template_id;
  std::vector<ZonePolygon> zones;

  /// Throws InvalidArgument on fewer than 3 vertices or repeated zone ids.
  void validate() const;
};

/// Even-odd crossing test. Points on an edge or vertex count as inside. An edge
/// takes part in the crossing count when it spans p.y half-open, including its
/// lower endpoint.
bool point_in_polygon(PointF p, const ZonePolygon& poly);

/// Smallest t >= 0 with origin + t * dir on an edge of poly; nullopt on a miss.
std::optional<double> ray_polygon_hit(PointF origin, PointF dir, const ZonePolygon& poly);

struct ZoneHit {
  std::string zone_id;
  double distance = 0.0;  // 0 when the head lies in the zone
  bool low_confidence = false;
};

/// Zone under the head, or else the first zone boundary met by the ray from the
/// head along direction, within ray_max. Equal distances resolve to the smaller
/// zone id with low_confidence set. Throws NoZoneHit.
ZoneHit locate_zone(PointF head, PointF direction, const ZoneMap& zm, Point template_origin, double ray_max);

/// As locate_zone, returning nullopt instead of throwing NoZoneHit.
std::optional<ZoneHit> try_locate_zone(PointF head, PointF direction, const ZoneMap& zm, Point template_origin,
                                       double ray_max);

/// Lines of the form `zone_id: x1,y1 x2,y2 ...`; '#' starts a comment.
ZoneMap parse_zone_map(const std::string& text, const std::string& template_id,
                       const std::string& source = "<string>");
ZoneMap load_zone_map(const std::filesystem::path& path, const std::string& template_id);
void save_zone_map(const ZoneMap& zm, const std::filesystem::path& path);
std::string format_zone_map(const ZoneMap& zm);

}  // namespace sheetscan
