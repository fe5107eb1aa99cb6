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
#include "sheetscan/zone_mapping.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sheetscan/error.hpp"
#include "sheetscan/kv_file.hpp"

namespace sheetscan {

namespace {

constexpr double kEps = 1e-9;

bool on_segment(PointF p, PointF a, PointF b) {
  const PointF ab = b - a;
  const PointF ap = p - a;
  if (std::abs(cross(ab, ap)) > kEps * std::max(1.0, ab.norm())) return false;
  return dot(ap, ab) >= -kEps && dot(p - b, a - b) >= -kEps;
}

}  // namespace

void ZoneMap::validate() const {
  std::set<std::string> ids;
  for (const auto& z : zones) {
    if (z.zone_id.empty()) throw Error(ErrorCode::InvalidArgument, "zone with an empty id in " + template_id);
    if (z.vertices.size() < 3) {
      throw Error(ErrorCode::InvalidArgument, "zone " + z.zone_id + " has fewer than 3 vertices");
    }
    if (!ids.insert(z.zone_id).second) throw Error(ErrorCode::InvalidArgument, "duplicate zone id " + z.zone_id);
  }
}

bool point_in_polygon(PointF p, const ZonePolygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PointF a(v[j]);
    const PointF b(v[i]);
    if (on_segment(p, a, b)) return true;
    if ((a.y <= p.y) != (b.y <= p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

std::optional<double> ray_polygon_hit(PointF origin, PointF dir, const ZonePolygon& poly) {
  std::optional<double> best;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  auto keep = [&best](double t) {
    if (t >= -kEps && (!best || t < *best)) best = std::max(0.0, t);
  };
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const PointF a(v[j]);
    const PointF e = PointF(v[i]) - a;
    const PointF w = a - origin;
    const double denom = cross(dir, e);
    if (std::abs(denom) < kEps) {
      // parallel: only a collinear edge can be met, first at its nearer end
      if (std::abs(cross(w, dir)) > kEps * std::max(1.0, w.norm())) continue;
      const double dd = dot(dir, dir);
      const double t0 = dot(w, dir) / dd;
      const double t1 = dot(w + e, dir) / dd;
      if (std::max(t0, t1) < -kEps) continue;
      keep(std::min(t0, t1) < 0 ? 0.0 : std::min(t0, t1));
      continue;
    }
    const double t = cross(w, e) / denom;
    const double s = cross(w, dir) / denom;
    if (s >= -kEps && s <= 1.0 + kEps) keep(t);
  }
  return best;
}

std::optional<ZoneHit> try_locate_zone(PointF head, PointF direction, const ZoneMap& zm, Point template_origin,
                                       double ray_max) {
  const PointF local = head - PointF(template_origin);
  std::optional<ZoneHit> hit;
  for (const auto& z : zm.zones) {  // a shared boundary can hold the head in several zones
    if (!point_in_polygon(local, z)) continue;
    if (!hit) {
      hit = ZoneHit{z.zone_id, 0.0, false};
    } else {
      hit->low_confidence = true;
      if (z.zone_id < hit->zone_id) hit->zone_id = z.zone_id;
    }
  }
  if (hit) return hit;
  const double len = direction.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "ray direction must be nonzero");
  const PointF dir = direction * (1.0 / len);
  for (const auto& z : zm.zones) {
    const auto t = ray_polygon_hit(local, dir, z);
    if (!t || *t > ray_max) continue;
    if (!hit || *t < hit->distance - kEps) {
      hit = ZoneHit{z.zone_id, *t, false};
    } else if (std::abs(*t - hit->distance) <= kEps) {
      hit->low_confidence = true;
      if (z.zone_id < hit->zone_id) hit->zone_id = z.zone_id;
    }
  }
  return hit;
}

ZoneHit locate_zone(PointF head, PointF direction, const ZoneMap& zm, Point template_origin, double ray_max) {
  auto hit = try_locate_zone(head, direction, zm, template_origin, ray_max);
  if (!hit) throw Error(ErrorCode::NoZoneHit, "ray from the head meets no zone of " + zm.template_id);
  return *hit;
}

ZoneMap parse_zone_map(const std::string& text, const std::string& template_id, const std::string& source) {
  ZoneMap zm{template_id, {}};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto colon = t.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ParseError, where + ": expected 'zone_id: x,y ...'");
    ZonePolygon z{trim(t.substr(0, colon)), {}};
    std::istringstream pts(t.substr(colon + 1));
    std::string tok;
    while (pts >> tok) {
      const auto parts = split(tok, ',');
      if (parts.size() != 2) throw Error(ErrorCode::ParseError, where + ": bad vertex '" + tok + "'");
      try {
        std::size_t ux = 0;
        std::size_t uy = 0;
        const int x = std::stoi(parts[0], &ux);
        const int y = std::stoi(parts[1], &uy);
        if (ux != parts[0].size() || uy != parts[1].size()) throw std::invalid_argument("trailing");
        z.vertices.push_back({x, y});
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, where + ": bad vertex '" + tok + "'");
      }
    }
    zm.zones.push_back(std::move(z));
  }
  try {
    zm.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
  return zm;
}

ZoneMap load_zone_map(const std::filesystem::path& path, const std::string& template_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open zone map " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_zone_map(ss.str(), template_id, path.string());
}

std::string format_zone_map(const ZoneMap& zm) {
  std::ostringstream out;
  for (const auto& z : zm.zones) {
    out << z.zone_id << ':';
    for (const auto& p : z.vertices) out << ' ' << p.x << ',' << p.y;
    out << '\n';
  }
  return out.str();
}

void save_zone_map(const ZoneMap& zm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write zone map " + path.string());
  out << format_zone_map(zm);
}

}  // namespace sheetscan
