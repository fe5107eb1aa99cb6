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
#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "sheetscan/error.hpp"
#include "sheetscan/synth_corpus.hpp"
#include "sheetscan/zone_mapping.hpp"
#include "suites.hpp"

using namespace sheetscan;

namespace {

ZonePolygon rect(const std::string& id, int x0, int y0, int x1, int y1) {
  return {id, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

ZoneMap strip_map() {
  // three zones along a horizontal strip
  return {"T0", {rect("Z1", 90, 0, 140, 100), rect("Z2", 200, 0, 260, 100), rect("Z3", 40, 0, 60, 100)}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IdMismatch;
}

}  // namespace

TEST(PointInPolygon, CentroidOutsideAndEdge) {
  const ZonePolygon sq = rect("A", 0, 0, 10, 10);
  EXPECT_TRUE(point_in_polygon({5, 5}, sq));
  EXPECT_FALSE(point_in_polygon({-1, 5}, sq));
  EXPECT_FALSE(point_in_polygon({5, 10.5}, sq));
  EXPECT_TRUE(point_in_polygon({10, 5}, sq));
  EXPECT_TRUE(point_in_polygon({0, 0}, sq));
  const ZonePolygon concave{"L", {{0, 0}, {20, 0}, {20, 5}, {5, 5}, {5, 20}, {0, 20}}};
  EXPECT_FALSE(point_in_polygon({15, 15}, concave));
  EXPECT_TRUE(point_in_polygon({2, 15}, concave));
}

TEST(RayHit, DistanceToFirstEdge) {
  const ZonePolygon sq = rect("A", 10, -5, 20, 5);
  EXPECT_NEAR(ray_polygon_hit({0, 0}, {1, 0}, sq).value(), 10.0, 1e-9);
  EXPECT_FALSE(ray_polygon_hit({0, 0}, {-1, 0}, sq).has_value());
  EXPECT_FALSE(ray_polygon_hit({0, 0}, {0, 1}, sq).has_value());
}

TEST(Locate, HeadInsideZone) {
  const ZoneHit h = locate_zone({230, 50}, {1, 0}, strip_map(), {0, 0}, 500);
  EXPECT_EQ(h.zone_id, "Z2");
  EXPECT_EQ(h.distance, 0.0);
  EXPECT_FALSE(h.low_confidence);
}

TEST(Locate, NearestAlongRay) {
  const ZoneHit h = locate_zone({0, 50}, {1, 0}, strip_map(), {0, 0}, 500);
  EXPECT_EQ(h.zone_id, "Z3");
  EXPECT_NEAR(h.distance, 40.0, 1e-9);
  const ZoneHit past = locate_zone({70, 50}, {1, 0}, strip_map(), {0, 0}, 500);
  EXPECT_EQ(past.zone_id, "Z1");
  EXPECT_NEAR(past.distance, 20.0, 1e-9);
}

TEST(Locate, NoZoneHit) {
  EXPECT_EQ(code_of([] { locate_zone({0, 50}, {-1, 0}, strip_map(), {0, 0}, 500); }), ErrorCode::NoZoneHit);
  EXPECT_EQ(code_of([] { locate_zone({0, 50}, {1, 0}, strip_map(), {0, 0}, 30); }), ErrorCode::NoZoneHit);
  EXPECT_FALSE(try_locate_zone({0, 50}, {-1, 0}, strip_map(), {0, 0}, 500).has_value());
  EXPECT_EQ(code_of([] { locate_zone({0, 50}, {0, 0}, strip_map(), {0, 0}, 500); }), ErrorCode::InvalidArgument);
}

TEST(Locate, TemplateOriginShiftsZones) {
  const ZoneHit h = locate_zone({1230, 750}, {1, 0}, strip_map(), {1000, 700}, 500);
  EXPECT_EQ(h.zone_id, "Z2");
}

TEST(Locate, EquidistantTieFlagged) {
  const ZoneMap zm{"T", {rect("B", 50, -20, 80, -1), rect("A", 50, 1, 80, 20)}};
  // the ray runs along the gap edge touching both zones at the same distance
  const ZoneMap touching{"T", {rect("B", 50, -20, 80, 0), rect("A", 50, 0, 80, 20)}};
  const ZoneHit h = locate_zone({0, 0}, {1, 0}, touching, {0, 0}, 500);
  EXPECT_EQ(h.zone_id, "A");
  EXPECT_TRUE(h.low_confidence);
  EXPECT_FALSE(try_locate_zone({0, 0}, {1, 0}, zm, {0, 0}, 500).has_value());
}

TEST(Locate, TranslationEquivariant) {
  Rng rng(91);
  const ZoneMap zm = strip_map();
  for (int i = 0; i < 300; ++i) {
    const PointF head{rng.uniform(-50.0, 300.0), rng.uniform(-50.0, 150.0)};
    const PointF dir{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (dir.norm() < 1e-3) continue;
    const Point shift{rng.uniform_int(-500, 500), rng.uniform_int(-500, 500)};
    const auto a = try_locate_zone(head, dir, zm, {0, 0}, 400);
    const auto b = try_locate_zone(head + PointF(shift), dir, zm, shift, 400);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      ASSERT_EQ(a->zone_id, b->zone_id);
      ASSERT_NEAR(a->distance, b->distance, 1e-6);
    }
  }
}

TEST(Locate, DirectionIrrelevantInsideZone) {
  Rng rng(92);
  for (int i = 0; i < 100; ++i) {
    const PointF head{rng.uniform(201.0, 259.0), rng.uniform(1.0, 99.0)};
    const PointF dir{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (dir.norm() < 1e-3) continue;
    EXPECT_EQ(locate_zone(head, dir, strip_map(), {0, 0}, 10).zone_id, "Z2");
  }
}

TEST(Locate, MatchesRayCastOracle) {
  const auto r = suites::zones(93, 1000);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(ZoneFile, ParseFormatRoundTrip) {
  const std::string text = "# comment\nZ1: 0,0 10,0 10,10\n\nZ2: 20,0 30,0 30,10 20,10  # trailing\n";
  const ZoneMap zm = parse_zone_map(text, "T7");
  ASSERT_EQ(zm.zones.size(), 2u);
  EXPECT_EQ(zm.template_id, "T7");
  EXPECT_EQ(zm.zones[1].vertices[3], (Point{20, 10}));
  const ZoneMap again = parse_zone_map(format_zone_map(zm), "T7");
  ASSERT_EQ(again.zones.size(), 2u);
  EXPECT_EQ(again.zones[0].zone_id, "Z1");
  EXPECT_EQ(again.zones[1].vertices, zm.zones[1].vertices);
  const auto path = std::filesystem::temp_directory_path() / "sheetscan_zones.txt";
  save_zone_map(zm, path);
  EXPECT_EQ(load_zone_map(path, "T7").zones[0].vertices, zm.zones[0].vertices);
  std::filesystem::remove(path);
}

TEST(ZoneFile, Errors) {
  EXPECT_EQ(code_of([] { parse_zone_map("Z1 0,0 1,0 1,1\n", "T"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_zone_map("Z1: 0,0 1,x 1,1\n", "T"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_zone_map("Z1: 0,0 1,0\n", "T"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_zone_map("Z1: 0,0 1,0 1,1\nZ1: 5,5 6,5 6,6\n", "T"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { load_zone_map("/nonexistent/zones.txt", "T"); }), ErrorCode::IoError);
  const ZoneMap bad{"T", {{"Z", {{0, 0}, {1, 1}}}}};
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidArgument);
}
