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

#include <algorithm>
#include <cmath>
#include <functional>

#include "sheetscan/assoc.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/synth_corpus.hpp"
#include "suites.hpp"

using namespace sheetscan;

namespace {

Connector line(PointF tail, PointF head, bool oriented = true) {
  return {head, tail, ConnectorKind::ArrowHeaded, "c0", oriented, false};
}

std::vector<ConnectedComponent> code_components(BinaryRaster& sheet, const std::string& code, Point at,
                                                std::uint64_t seed) {
  Rng rng(seed);
  const CodePatch p = render_code_patch(SyntheticFont::standard(), code, rng);
  BinaryRaster only(sheet.width(), sheet.height());
  only.paste(p.raster, at);
  sheet.paste(p.raster, at);
  return connected_components(only);
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

TEST(TailRay, EntryDistance) {
  PointF entry;
  EXPECT_NEAR(tail_ray_entry({0, 10}, {1, 0}, {20, 0, 40, 20}, &entry), 20.0, 1e-12);
  EXPECT_EQ(entry, (PointF{20, 10}));
  EXPECT_LT(tail_ray_entry({0, 10}, {-1, 0}, {20, 0, 40, 20}), 0.0);
  EXPECT_LT(tail_ray_entry({0, 10}, {0, 0}, {20, 0, 40, 20}), 0.0);
  EXPECT_NEAR(tail_ray_entry({30, 10}, {1, 0}, {20, 0, 40, 20}), 0.0, 1e-12);
}

TEST(Associate, NearTailKeptFarDropped) {
  const std::vector<TextBox> boxes{{{100, 100, 160, 130}, {0}}};
  // tail 20 px left of the box, pointing away from it
  const std::vector<Connector> cs{line({80, 115}, {0, 115}), line({600, 600}, {700, 700})};
  const AssocResult r = associate_and_filter(cs, boxes);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].box, 0);
  EXPECT_NEAR(r.candidates[0].tail_distance, 20.0, 1e-9);
  EXPECT_EQ(r.candidates[0].entry, (PointF{100, 115}));
  ASSERT_EQ(r.dropped.size(), 1u);
}

TEST(Associate, BeyondMaxDistanceDropped) {
  const std::vector<TextBox> boxes{{{400, 100, 460, 130}, {0}}};
  const std::vector<Connector> cs{line({200, 115}, {100, 115})};
  EXPECT_TRUE(associate_and_filter(cs, boxes).candidates.empty());
  AssocParams p;
  p.max_distance = 250;
  EXPECT_EQ(associate_and_filter(cs, boxes, p).candidates.size(), 1u);
}

TEST(Associate, NearestBoxWins) {
  const std::vector<TextBox> boxes{{{200, 100, 260, 130}, {0}}, {{120, 100, 160, 130}, {1}}};
  const std::vector<Connector> cs{line({100, 115}, {0, 115})};
  const AssocResult r = associate_and_filter(cs, boxes);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].box, 1);
}

TEST(Associate, UnorientedLineFlipsToNearerEnd) {
  const std::vector<TextBox> boxes{{{100, 100, 160, 130}, {0}}};
  // the recorded tail is the far end; the head sits next to the box
  const std::vector<Connector> cs{line({0, 115}, {90, 115}, false)};
  const AssocResult r = associate_and_filter(cs, boxes);
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.candidates[0].connector.tail, (PointF{90, 115}));
  EXPECT_EQ(r.candidates[0].connector.head, (PointF{0, 115}));
}

TEST(Associate, EmptyInputs) {
  const std::vector<TextBox> boxes{{{100, 100, 160, 130}, {0}}};
  const std::vector<Connector> cs{line({80, 115}, {0, 115})};
  EXPECT_TRUE(associate_and_filter({}, boxes).candidates.empty());
  const AssocResult r = associate_and_filter(cs, {});
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_EQ(r.dropped.size(), 1u);
}

TEST(ComponentsInBox, FiltersBySizeAndContainment) {
  BinaryRaster sheet(300, 200);
  const auto comps = code_components(sheet, "4K7", {50, 50}, 61);
  sheet.set(5, 5);
  const auto all = connected_components(sheet);
  EXPECT_EQ(components_in_box(all, {0, 0, 299, 199}).size(), all.size());
  EXPECT_EQ(components_in_box(all, {0, 0, 299, 199}, 2).size(), comps.size());
  EXPECT_TRUE(components_in_box(all, {0, 0, 299, 199}, 1, 0).empty());
}

TEST(Split, SingleConnectorTakesAll) {
  BinaryRaster sheet(400, 300);
  const auto comps = code_components(sheet, "2C1", {100, 100}, 62);
  const TextBox box{{90, 90, 100 + 120, 150}, {0}};
  const std::vector<Connector> cs{line({150, 80}, {150, 10})};
  const auto patches = split_box(box, cs, comps, 100, 4);
  ASSERT_EQ(patches.size(), 1u);
  EXPECT_EQ(patches[0].components.size(), comps.size());
  EXPECT_EQ(patches[0].parent_box, 4);
}

TEST(Split, TwoCodesTwoConnectors) {
  BinaryRaster sheet(600, 300);
  const auto a = code_components(sheet, "2C1", {100, 100}, 63);
  const auto b = code_components(sheet, "(B)", {100 + 120 + 60, 100}, 64);
  std::vector<ConnectedComponent> comps = a;
  comps.insert(comps.end(), b.begin(), b.end());
  BBox hull = comps[0].bbox;
  for (const auto& c : comps) hull = hull.united(c.bbox);
  const TextBox box{hull, {0}};
  const double ax = (a.front().bbox.x0 + a.back().bbox.x1) / 2.0;
  const double bx = (b.front().bbox.x0 + b.back().bbox.x1) / 2.0;
  const std::vector<Connector> cs{line({bx, 80}, {bx, 0}), line({ax, 80}, {ax, 0})};
  const auto patches = split_box(box, cs, comps);
  ASSERT_EQ(patches.size(), 2u);
  EXPECT_EQ(patches[0].components.size(), b.size());
  EXPECT_EQ(patches[1].components.size(), a.size());
  EXPECT_LT(patches[1].bbox.x1, patches[0].bbox.x0);
}

TEST(Split, MoreConnectorsThanComponentsInfeasible) {
  BinaryRaster sheet(200, 100);
  sheet.set(10, 10);
  sheet.set(50, 10);
  const auto comps = connected_components(sheet);
  const std::vector<Connector> cs{line({10, 30}, {10, 90}), line({50, 30}, {50, 90}), line({30, 30}, {30, 90})};
  EXPECT_EQ(code_of([&] { split_box({{0, 0, 60, 20}, {0}}, cs, comps); }), ErrorCode::SplitInfeasible);
  EXPECT_EQ(code_of([&] { split_box({{0, 0, 60, 20}, {0}}, {}, comps); }), ErrorCode::InvalidArgument);
}

TEST(Split, PartitionMatchesOptimalBipartition) {
  const auto r = suites::split(65, 300);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Split, PatchesPartitionComponents) {
  Rng rng(66);
  for (int i = 0; i < 100; ++i) {
    BinaryRaster sheet(800, 200);
    const int k = rng.uniform_int(1, 3);
    std::vector<ConnectedComponent> comps;
    std::vector<Connector> cs;
    for (int j = 0; j < k; ++j) {
      const int x = 60 + 220 * j + rng.uniform_int(-10, 10);
      const auto part = code_components(sheet, "4K7", {x, 80}, rng.uniform_int(0, 1 << 20));
      comps.insert(comps.end(), part.begin(), part.end());
      cs.push_back(line({x + 40.0, 60}, {x + 40.0 + rng.uniform(-30.0, 30.0), 0}));
    }
    BBox hull = comps[0].bbox;
    for (const auto& c : comps) hull = hull.united(c.bbox);
    const auto patches = split_box({hull, {0}}, cs, comps);
    ASSERT_EQ(patches.size(), std::size_t(k));
    std::size_t total = 0;
    for (const auto& p : patches) {
      ASSERT_FALSE(p.components.empty());
      total += p.components.size();
      for (const auto& c : p.components) ASSERT_TRUE(p.bbox.contains(c.bbox));
    }
    ASSERT_EQ(total, comps.size());
  }
}
