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
#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "sheetscan/assoc.hpp"
#include "sheetscan/code_reader.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/raster.hpp"
#include "sheetscan/synth_corpus.hpp"
#include "sheetscan/template_ops.hpp"
#include "sheetscan/zone_mapping.hpp"

namespace sheetscan::suites {
namespace {

void fail(SuiteResult& r, int instance, const std::string& what) {
  if (r.failures++ == 0) r.first_failure = "instance " + std::to_string(instance) + ": " + what;
}

bool yx_before(Point a, Point b) { return a.y < b.y || (a.y == b.y && a.x < b.x); }

}  // namespace

SuiteResult ncc(std::uint64_t seed, int instances) {
  SuiteResult r{"ncc_vs_brute_force", instances, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const int w = rng.uniform_int(4, 64);
    const int h = rng.uniform_int(4, 64);
    const int tw = rng.uniform_int(1, std::min(w, 24));
    const int th = rng.uniform_int(1, std::min(h, 24));
    BinaryRaster sheet = i % 10 == 9 ? BinaryRaster(w, h) : oracle::random_binary(rng, w, h, rng.uniform(0.02, 0.5));
    BinaryRaster tmpl = oracle::random_binary(rng, tw, th, rng.uniform(0.2, 0.7));
    tmpl.set(rng.uniform_int(0, tw - 1), rng.uniform_int(0, th - 1));
    if (i % 2 == 0 && i % 10 != 9) sheet.paste(tmpl, {rng.uniform_int(0, w - tw), rng.uniform_int(0, h - th)});
    const oracle::NccResult want = oracle::ncc(sheet, tmpl);
    const Template t{tmpl, {}, "t"};
    try {
      const NccMatch got = ncc_locate(sheet, t);
      if (!want.defined) {
        fail(r, i, "expected DegenerateInput");
      } else if (!(got.location == want.location) || std::abs(got.score - want.score) > kNccTolerance) {
        std::ostringstream o;
        o << "got (" << got.location.x << "," << got.location.y << ") " << got.score << ", want ("
          << want.location.x << "," << want.location.y << ") " << want.score;
        fail(r, i, o.str());
      }
    } catch (const Error& e) {
      if (want.defined || e.code() != ErrorCode::DegenerateInput) fail(r, i, e.what());
    }
  }
  return r;
}

SuiteResult components(std::uint64_t seed, int instances) {
  SuiteResult r{"components_vs_flood_fill", instances, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const BinaryRaster img =
        oracle::random_binary(rng, rng.uniform_int(1, 64), rng.uniform_int(1, 64), rng.uniform(0.05, 0.65));
    const bool eight = i % 2 == 0;
    const auto want = oracle::flood_fill(img, eight);
    const auto got = connected_components(img, eight ? Connectivity::Eight : Connectivity::Four);
    std::vector<std::vector<Point>> sets;
    bool ok = got.size() == want.size();
    for (std::size_t k = 0; ok && k < got.size(); ++k) {
      const auto& c = got[k];
      if (k > 0 && (c.bbox.y0 < got[k - 1].bbox.y0 ||
                    (c.bbox.y0 == got[k - 1].bbox.y0 && c.bbox.x0 < got[k - 1].bbox.x0))) {
        ok = false;
        break;
      }
      auto px = c.pixels;
      std::sort(px.begin(), px.end(), yx_before);
      BBox hull{px[0].x, px[0].y, px[0].x, px[0].y};
      double sx = 0, sy = 0;
      for (const Point& p : px) {
        hull = hull.united({p.x, p.y, p.x, p.y});
        sx += p.x;
        sy += p.y;
      }
      const double n = double(px.size());
      if (!(hull == c.bbox) || std::abs(c.centroid.x - sx / n) > 1e-9 || std::abs(c.centroid.y - sy / n) > 1e-9) {
        ok = false;
      }
      sets.push_back(std::move(px));
    }
    if (ok) {
      std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) { return yx_before(a[0], b[0]); });
      ok = sets == want;
    }
    if (!ok) {
      fail(r, i, std::to_string(got.size()) + " components vs " + std::to_string(want.size()) + " from flood fill (" +
                     (eight ? "8" : "4") + "-connected)");
    }
  }
  return r;
}

SuiteResult otsu(std::uint64_t seed, int instances) {
  SuiteResult r{"otsu_vs_exhaustive", instances, 0, {}};
  Rng rng(seed);
  const int level_counts[] = {1, 2, 3, 4, 7, 16, 256};
  for (int i = 0; i < instances; ++i) {
    const GrayRaster img = oracle::random_gray(rng, 16, 16, level_counts[i % 7]);
    const int want = oracle::otsu(img);
    const int got = otsu_threshold(img);
    if (got != want) {
      fail(r, i, "threshold " + std::to_string(got) + " vs " + std::to_string(want));
      continue;
    }
    const BinaryRaster b = binarize_otsu(img);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        if (b.at(x, y) != (want >= 0 && img.at(x, y) <= want)) {
          fail(r, i, "binarization disagrees with its threshold");
          y = x = 16;
        }
      }
    }
  }
  return r;
}

SuiteResult ranking(std::uint64_t seed, int instances) {
  SuiteResult r{"rank_segments_vs_reading_order", instances, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    struct Item {
      Segment seg;
      int line;
    };
    std::vector<Item> items;
    const int lines = rng.uniform_int(1, 4);
    for (int line = 0; line < lines; ++line) {
      const int count = rng.uniform_int(1, 6);
      int x = rng.uniform_int(0, 20);
      for (int k = 0; k < count; ++k) {
        const int w = rng.uniform_int(8, 20);
        const int h = rng.uniform_int(16, 30);
        const int y = 60 * line + rng.uniform_int(0, 5);
        std::vector<Point> px;
        for (int yy = y; yy < y + h; ++yy) {
          for (int xx = x; xx < x + w; ++xx) px.push_back({xx, yy});
        }
        items.push_back({Segment::from_pixels(std::move(px)), line});
        x += w + rng.uniform_int(1, 12);
      }
    }
    for (std::size_t k = items.size(); k > 1; --k) {
      std::swap(items[k - 1], items[std::size_t(rng.uniform_int(0, int(k) - 1))]);
    }
    std::vector<Segment> input;
    for (const auto& it : items) input.push_back(it.seg);
    const double thresh = i % 2 ? default_overlap_thresh(input) : rng.uniform(8.0, 14.0);
    auto want = items;
    std::sort(want.begin(), want.end(), [](const Item& a, const Item& b) {
      return a.line < b.line || (a.line == b.line && a.seg.x_left < b.seg.x_left);
    });
    const auto got = rank_segments(input, thresh);
    bool ok = got.size() == want.size();
    for (std::size_t k = 0; ok && k < got.size(); ++k) {
      ok = got[k].x_left == want[k].seg.x_left && got[k].y_top == want[k].seg.y_top;
    }
    if (!ok) fail(r, i, "order differs from (line, x_left)");
  }
  return r;
}

SuiteResult levenshtein(std::uint64_t seed, int instances) {
  SuiteResult r{"levenshtein_vs_dp", instances, 0, {}};
  Rng rng(seed);
  const std::string pool = "0123456789ABCDEFGHIJKLMNOPQRS()";
  for (int i = 0; i < instances; ++i) {
    const int alpha = rng.uniform_int(2, 8);
    auto word = [&] {
      std::string s;
      const int n = rng.uniform_int(0, 10);
      for (int k = 0; k < n; ++k) s.push_back(pool[std::size_t(rng.uniform_int(0, alpha - 1))]);
      return s;
    };
    const std::string a = word();
    const std::string b = word();
    const int want = oracle::levenshtein(a, b);
    const int got = sheetscan::levenshtein(a, b);
    if (got != want) fail(r, i, "'" + a + "' vs '" + b + "': " + std::to_string(got) + " != " + std::to_string(want));
  }
  return r;
}

SuiteResult zones(std::uint64_t seed, int instances) {
  SuiteResult r{"locate_zone_vs_ray_edge", instances, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    ZoneMap zm{"T0", {}};
    const int count = rng.uniform_int(1, 5);
    for (int z = 0; z < count; ++z) {
      // star polygon about its cell centre, one vertex per angular sector
      const double cx = 50 + 100 * (z % 3);
      const double cy = 50 + 100 * (z / 3);
      const int n = rng.uniform_int(3, 9);
      ZonePolygon poly{"Z" + std::to_string(z + 1), {}};
      for (int k = 0; k < n; ++k) {
        const double a = 2 * std::numbers::pi * (k + 0.35 + 0.3 * rng.uniform()) / n;
        const double rad = rng.uniform(15.0, 45.0);
        poly.vertices.push_back({int(std::lround(cx + rad * std::cos(a))), int(std::lround(cy + rad * std::sin(a)))});
      }
      zm.zones.push_back(std::move(poly));
    }
    try {
      zm.validate();
    } catch (const Error&) {
      --i;
      continue;
    }
    const Point origin{rng.uniform_int(0, 300), rng.uniform_int(0, 300)};
    const PointF head{origin.x + rng.uniform(-60.0, 360.0), origin.y + rng.uniform(-60.0, 260.0)};
    const double ang = rng.uniform(0.0, 2 * std::numbers::pi);
    const PointF dir{std::cos(ang), std::sin(ang)};
    const double ray_max = rng.uniform(30.0, 500.0);
    const auto want = oracle::ray_zone(head, dir, zm, origin, ray_max);
    const auto got = try_locate_zone(head, dir, zm, origin, ray_max);
    const std::string g = got ? got->zone_id : "none";
    const std::string w = want ? *want : "none";
    if (g != w) fail(r, i, "zone " + g + " vs " + w);
    // the throwing form agrees with the optional form
    try {
      const ZoneHit hit = locate_zone(head, dir, zm, origin, ray_max);
      if (!got || hit.zone_id != got->zone_id) fail(r, i, "locate_zone disagrees with try_locate_zone");
    } catch (const Error& e) {
      if (got || e.code() != ErrorCode::NoZoneHit) fail(r, i, e.what());
    }
  }
  return r;
}

SuiteResult split(std::uint64_t seed, int instances) {
  SuiteResult r{"split_box_vs_bipartition", instances, 0, {}};
  Rng rng(seed);
  for (int i = 0; i < instances; ++i) {
    const int na = rng.uniform_int(1, 6);
    const int nb = rng.uniform_int(1, 6);
    const PointF ca{rng.uniform(100.0, 200.0), rng.uniform(100.0, 200.0)};
    const double dist = rng.uniform(80.0, 160.0);
    const double theta = rng.uniform(-0.3, 0.3);
    const PointF cb = ca + PointF{dist * std::cos(theta), dist * std::sin(theta)};
    std::vector<ConnectedComponent> comps;
    for (int k = 0; k < na + nb; ++k) {
      const PointF c = k < na ? ca : cb;
      const double a = rng.uniform(0.0, 2 * std::numbers::pi);
      const double rad = rng.uniform(0.0, 18.0);
      const int x0 = int(std::lround(c.x + rad * std::cos(a)));
      const int y0 = int(std::lround(c.y + rad * std::sin(a)));
      const int w = rng.uniform_int(3, 10);
      const int h = rng.uniform_int(3, 10);
      std::vector<Point> px;
      for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) px.push_back({x, y});
      }
      comps.push_back(make_component(std::move(px), k));
    }
    BBox hull = comps[0].bbox;
    for (const auto& c : comps) hull = hull.united(c.bbox);
    const TextBox box{hull, {}};
    std::vector<Connector> conns;
    for (const PointF c : {ca, cb}) {
      const PointF tail{c.x, hull.y0 - rng.uniform(5.0, 30.0)};
      const PointF head{c.x + rng.uniform(-20.0, 20.0), tail.y - rng.uniform(60.0, 150.0)};
      conns.push_back({head, tail, ConnectorKind::ArrowHeaded, "c", true, false});
    }
    std::vector<PointF> centroids;
    for (const auto& c : comps) centroids.push_back(c.centroid);
    const unsigned want = oracle::best_bipartition(centroids);
    try {
      const auto patches = split_box(box, conns, comps);
      unsigned got = 0;
      const bool zero_in_second =
          std::any_of(patches[1].components.begin(), patches[1].components.end(), [](const auto& c) { return c.id == 0; });
      for (const auto& c : patches[zero_in_second ? 0 : 1].components) got |= 1u << c.id;
      if (patches[0].components.size() + patches[1].components.size() != comps.size()) {
        fail(r, i, "patches do not partition the components");
      } else if (got != want) {
        fail(r, i, "partition mask " + std::to_string(got) + " vs " + std::to_string(want));
      } else {
        // connector k was drawn over cluster k; its patch holds that cluster
        for (std::size_t k = 0; k < 2; ++k) {
          const int member = k == 0 ? 0 : na;
          const auto& pc = patches[k].components;
          if (std::none_of(pc.begin(), pc.end(), [&](const auto& c) { return c.id == member; })) {
            fail(r, i, "connector " + std::to_string(k) + " paired with the wrong group");
          }
        }
      }
    } catch (const Error& e) {
      fail(r, i, e.what());
    }
  }
  return r;
}

}  // namespace sheetscan::suites
