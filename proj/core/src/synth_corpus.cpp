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
#include "sheetscan/synth_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "sheetscan/error.hpp"
#include "sheetscan/kv_file.hpp"

namespace sheetscan {

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "uniform_int: empty range");
  const std::uint64_t span = std::uint64_t(std::int64_t(hi) - lo) + 1;
  return int(std::int64_t(lo) + std::int64_t(next() % span));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Drawing

namespace {

PointF rotate(PointF v, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  return {v.x * std::cos(a) - v.y * std::sin(a), v.x * std::sin(a) + v.y * std::cos(a)};
}

PointF unit(PointF v) { return v * (1.0 / v.norm()); }

PointF perp(PointF v) { return {-v.y, v.x}; }

void stamp(BinaryRaster& r, int x, int y, double pen) {
  const int k = int(std::floor(pen));
  for (int dy = -k; dy <= k; ++dy) {
    for (int dx = -k; dx <= k; ++dx) {
      if (dx * dx + dy * dy <= pen * pen && r.in_bounds(x + dx, y + dy)) r.set(x + dx, y + dy);
    }
  }
}

}  // namespace

void draw_line(BinaryRaster& r, PointF a, PointF b, double pen) {
  int x0 = int(std::lround(a.x));
  int y0 = int(std::lround(a.y));
  const int x1 = int(std::lround(b.x));
  const int y1 = int(std::lround(b.y));
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    stamp(r, x0, y0, pen);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_polyline(BinaryRaster& r, const std::vector<PointF>& pts, double pen) {
  if (pts.size() == 1) stamp(r, int(std::lround(pts[0].x)), int(std::lround(pts[0].y)), pen);
  for (std::size_t i = 1; i < pts.size(); ++i) draw_line(r, pts[i - 1], pts[i], pen);
}

void fill_triangle(BinaryRaster& r, PointF a, PointF b, PointF c) {
  const int x0 = std::max(0, int(std::floor(std::min({a.x, b.x, c.x}))));
  const int x1 = std::min(r.width() - 1, int(std::ceil(std::max({a.x, b.x, c.x}))));
  const int y0 = std::max(0, int(std::floor(std::min({a.y, b.y, c.y}))));
  const int y1 = std::min(r.height() - 1, int(std::ceil(std::max({a.y, b.y, c.y}))));
  const double area = cross(b - a, c - a);
  if (area == 0.0) return;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const PointF p(x, y);
      const double w0 = cross(b - a, p - a) / area;
      const double w1 = cross(c - b, p - b) / area;
      const double w2 = cross(a - c, p - c) / area;
      if (w0 >= 0 && w1 >= 0 && w2 >= 0) r.set(x, y);
    }
  }
}

// ---------------------------------------------------------------------------
// Font

namespace {

using Stroke = SyntheticFont::Stroke;

struct GlyphDef {
  char symbol;
  double width;
  std::vector<Stroke> strokes;
};

std::vector<GlyphDef> glyph_defs() {
  // x to the right, y down, cap height 24.
  return {
      {'0', 20, {{{6, 0}, {14, 0}, {20, 6}, {20, 18}, {14, 24}, {6, 24}, {0, 18}, {0, 6}, {6, 0}}, {{4, 20}, {16, 4}}}},
      {'1', 20, {{{4, 5}, {10, 0}, {10, 24}}, {{2, 24}, {18, 24}}}},
      {'2', 20, {{{0, 5}, {5, 0}, {15, 0}, {20, 5}, {20, 10}, {0, 24}, {20, 24}}}},
      {'3', 20, {{{0, 2}, {4, 0}, {16, 0}, {20, 4}, {20, 8}, {16, 11}, {8, 11}},
                 {{16, 11}, {20, 14}, {20, 20}, {16, 24}, {4, 24}, {0, 22}}}},
      {'4', 20, {{{14, 24}, {14, 0}, {0, 16}, {20, 16}}}},
      {'5', 20, {{{20, 0}, {2, 0}, {0, 11}, {14, 9}, {20, 14}, {20, 20}, {15, 24}, {0, 24}}}},
      {'6', 20, {{{18, 0}, {8, 0}, {0, 8}, {0, 20}, {4, 24}, {16, 24}, {20, 20}, {20, 14}, {16, 10}, {4, 10}, {0, 14}}}},
      {'7', 20, {{{0, 0}, {20, 0}, {8, 24}}, {{6, 12}, {16, 12}}}},
      {'8', 20, {{{5, 0}, {15, 0}, {18, 3}, {18, 8}, {15, 11}, {5, 11}, {2, 8}, {2, 3}, {5, 0}},
                 {{4, 11}, {16, 11}, {20, 15}, {20, 20}, {16, 24}, {4, 24}, {0, 20}, {0, 15}, {4, 11}}}},
      {'9', 20, {{{2, 24}, {12, 24}, {20, 16}, {20, 4}, {16, 0}, {4, 0}, {0, 4}, {0, 10}, {4, 14}, {16, 14}, {20, 10}}}},
      {'A', 20, {{{0, 24}, {10, 0}, {20, 24}}, {{4, 15}, {16, 15}}}},
      {'B', 20, {{{0, 0}, {0, 24}},
                 {{0, 0}, {14, 0}, {18, 3}, {18, 8}, {14, 11}, {0, 11}},
                 {{0, 11}, {16, 11}, {20, 15}, {20, 20}, {16, 24}, {0, 24}}}},
      {'C', 20, {{{20, 3}, {17, 0}, {5, 0}, {0, 5}, {0, 19}, {5, 24}, {17, 24}, {20, 21}}}},
      {'D', 20, {{{0, 0}, {0, 24}, {12, 24}, {20, 16}, {20, 8}, {12, 0}, {0, 0}}}},
      {'E', 20, {{{20, 0}, {0, 0}, {0, 24}, {20, 24}}, {{0, 12}, {14, 12}}}},
      {'F', 20, {{{20, 0}, {0, 0}, {0, 24}}, {{0, 12}, {14, 12}}}},
      {'G', 20, {{{20, 3}, {17, 0}, {5, 0}, {0, 5}, {0, 19}, {5, 24}, {17, 24}, {20, 21}, {20, 13}, {11, 13}}}},
      {'H', 20, {{{0, 0}, {0, 24}}, {{20, 0}, {20, 24}}, {{0, 12}, {20, 12}}}},
      {'I', 20, {{{4, 0}, {16, 0}}, {{10, 0}, {10, 24}}, {{4, 24}, {16, 24}}}},
      {'J', 20, {{{4, 0}, {20, 0}}, {{14, 0}, {14, 19}, {9, 24}, {4, 24}, {0, 19}}}},
      {'K', 20, {{{0, 0}, {0, 24}}, {{20, 0}, {0, 14}}, {{6, 10}, {20, 24}}}},
      {'L', 20, {{{0, 0}, {0, 24}, {20, 24}}}},
      {'M', 20, {{{0, 24}, {0, 0}, {10, 14}, {20, 0}, {20, 24}}}},
      {'N', 20, {{{0, 24}, {0, 0}, {20, 24}, {20, 0}}}},
      {'O', 20, {{{10, 0}, {17, 2}, {20, 8}, {20, 16}, {17, 22}, {10, 24}, {3, 22}, {0, 16}, {0, 8}, {3, 2}, {10, 0}}}},
      {'P', 20, {{{0, 24}, {0, 0}, {15, 0}, {20, 4}, {20, 9}, {15, 13}, {0, 13}}}},
      {'Q', 20, {{{10, 0}, {17, 2}, {20, 8}, {20, 16}, {17, 22}, {10, 24}, {3, 22}, {0, 16}, {0, 8}, {3, 2}, {10, 0}},
                 {{11, 15}, {20, 24}}}},
      {'R', 20, {{{0, 24}, {0, 0}, {15, 0}, {20, 4}, {20, 9}, {15, 13}, {0, 13}}, {{10, 13}, {20, 24}}}},
      {'S', 20, {{{20, 3}, {16, 0}, {4, 0}, {0, 4}, {0, 8}, {4, 11}, {16, 13}, {20, 16}, {20, 20}, {16, 24}, {4, 24}, {0, 21}}}},
      {'(', 12, {{{11, 0}, {4, 5}, {1, 12}, {4, 19}, {11, 24}}}},
      {')', 12, {{{1, 0}, {8, 5}, {11, 12}, {8, 19}, {1, 24}}}},
  };
}

}  // namespace

SyntheticFont::SyntheticFont() {
  auto defs = glyph_defs();
  std::sort(defs.begin(), defs.end(), [](const GlyphDef& a, const GlyphDef& b) { return a.symbol < b.symbol; });
  for (auto& d : defs) {
    symbols_.push_back(d.symbol);
    widths_.push_back(d.width);
    strokes_.push_back(std::move(d.strokes));
  }
}

const SyntheticFont& SyntheticFont::standard() {
  static const SyntheticFont font;
  return font;
}

std::string SyntheticFont::letters() const {
  std::string s;
  for (char c : symbols_) {
    if (c >= 'A' && c <= 'Z') s.push_back(c);
  }
  return s;
}

std::string SyntheticFont::digits() const {
  std::string s;
  for (char c : symbols_) {
    if (c >= '0' && c <= '9') s.push_back(c);
  }
  return s;
}

const std::vector<SyntheticFont::Stroke>& SyntheticFont::strokes(char symbol) const {
  const auto pos = symbols_.find(symbol);
  if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, std::string("no glyph for '") + symbol + "'");
  return strokes_[pos];
}

double SyntheticFont::advance(char symbol) const {
  const auto pos = symbols_.find(symbol);
  if (pos == std::string::npos) throw Error(ErrorCode::InvalidArgument, std::string("no glyph for '") + symbol + "'");
  return widths_[pos];
}

BinaryRaster SyntheticFont::render(char symbol, double rotation_deg, double scale) const {
  const auto& strokes = this->strokes(symbol);
  const PointF centre(advance(symbol) / 2.0, 12.0);
  const int side = int(std::ceil(48.0 * std::max(1.0, scale))) + 8;
  BinaryRaster canvas(side, side);
  const PointF mid(side / 2.0, side / 2.0);
  for (const auto& stroke : strokes) {
    std::vector<PointF> pts;
    for (const PointF& p : stroke) pts.push_back(mid + rotate((p - centre) * scale, rotation_deg));
    draw_polyline(canvas, pts);
  }
  const auto comps = connected_components(canvas);
  BBox box = comps.front().bbox;
  for (const auto& c : comps) box = box.united(c.bbox);
  return canvas.crop(box);
}

Alphabet SyntheticFont::alphabet() const {
  std::vector<std::pair<char, BinaryRaster>> glyphs;
  for (char c : symbols_) glyphs.emplace_back(c, render(c));
  return Alphabet(std::move(glyphs));
}

std::vector<std::string> enumerate_codes(const SyntheticFont& font) {
  std::vector<std::string> codes;
  const std::string digits = font.digits();
  const std::string letters = font.letters();
  for (char d : digits) {
    for (char l : letters) {
      codes.push_back({d, l});
      for (char d2 : digits) codes.push_back({d, l, d2});
    }
  }
  for (char l : letters) codes.push_back({'(', l, ')'});
  std::sort(codes.begin(), codes.end());
  return codes;
}

std::vector<RewriteRule> default_rules() {
  return {{"1?)", "(?)"}, {"(?1", "(?)"}};
}

// ---------------------------------------------------------------------------
// Scene description

void SceneSpec::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must lie in [0, 1]");
  };
  prob(noise.salt_pepper, "salt_pepper");
  prob(noise.fused_pair, "fused_pair");
  prob(noise.headless_line, "headless_line");
  prob(noise.cloud, "cloud");
  if (noise.stroke_jitter < 0.0 || noise.stroke_jitter > 6.0) {
    throw Error(ErrorCode::InvalidArgument, "stroke_jitter must lie in [0, 6]");
  }
  if (width < 400 || height < 300) throw Error(ErrorCode::InvalidArgument, "canvas must be at least 400x300");
  if (template_count < 0) throw Error(ErrorCode::InvalidArgument, "template_count must be >= 0");
  if (zones_per_template < 1 || zones_per_template > 8) {
    throw Error(ErrorCode::InvalidArgument, "zones_per_template must lie in [1, 8]");
  }
  if (annotations < 0) throw Error(ErrorCode::InvalidArgument, "annotations must be >= 0");
  if (annotations > 0 && template_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "annotations need at least one template");
  }
  if (set_id.empty()) throw Error(ErrorCode::InvalidArgument, "set_id must not be empty");
}

SceneSpec parse_scene_spec(const std::string& text, const std::string& source) {
  SceneSpec s;
  for (const auto& kv : parse_kv(text, source)) {
    const std::string& k = kv.key;
    if (k == "seed") s.seed = std::uint64_t(parse_int(kv));
    else if (k == "layout_seed") s.layout_seed = std::uint64_t(parse_int(kv));
    else if (k == "set_id") s.set_id = kv.value;
    else if (k == "width") s.width = int(parse_int(kv));
    else if (k == "height") s.height = int(parse_int(kv));
    else if (k == "template_count") s.template_count = int(parse_int(kv));
    else if (k == "zones_per_template") s.zones_per_template = int(parse_int(kv));
    else if (k == "annotations") s.annotations = int(parse_int(kv));
    else if (k == "stroke_jitter") s.noise.stroke_jitter = parse_double(kv);
    else if (k == "salt_pepper") s.noise.salt_pepper = parse_double(kv);
    else if (k == "fused_pair") s.noise.fused_pair = parse_double(kv);
    else if (k == "headless_line") s.noise.headless_line = parse_double(kv);
    else if (k == "cloud") s.noise.cloud = parse_double(kv);
    else throw Error(ErrorCode::ParseError, source + ":" + std::to_string(kv.line) + ": unknown key '" + k + "'");
  }
  s.validate();
  return s;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Layout

namespace {

struct Edge {
  PointF a;
  PointF b;
  PointF inward;
};

struct PlacedTemplate {
  BBox rect;  // drawn rectangle on the canvas (stroke centre line)
  BBox ink;
};

}  // namespace

namespace {

std::vector<PlacedTemplate> placed_templates(const SceneSpec& spec, BinaryRaster& canvas, std::vector<ZoneMap>& maps,
                                             std::vector<BinaryRaster>& rasters) {
  Rng rng(mix_seed(spec.layout_seed, 0x51A7));
  const int n = spec.template_count;
  std::vector<PlacedTemplate> out;
  if (n == 0) return out;
  const int cols = int(std::ceil(std::sqrt(double(n) * spec.width / spec.height)));
  const int rows = (n + cols - 1) / cols;
  const int cell_w = spec.width / cols;
  const int cell_h = spec.height / rows;
  const int k = spec.zones_per_template;
  const int per_row = k > 4 ? (k + 1) / 2 : k;
  const int min_w = std::max(150, per_row * 36);
  const int max_w = std::min(240, cell_w - 200);
  const int min_h = 100;
  const int max_h = std::min(150, cell_h - 240);
  if (max_w < min_w || max_h < min_h) {
    throw Error(ErrorCode::GenerationInfeasible, "canvas too small for " + std::to_string(n) + " templates");
  }
  struct Draft {
    BBox rect;
    std::vector<BBox> zones;
    int bolt_zone = -1;
    int bolt_radius = 0;
  };
  std::vector<Draft> drafts;
  for (int i = 0; i < n; ++i) {
    const int cx = (i % cols) * cell_w + cell_w / 2 + rng.uniform_int(-20, 20);
    const int cy = (i / cols) * cell_h + cell_h / 2 + rng.uniform_int(-20, 20);
    const int w = rng.uniform_int(min_w, max_w);
    const int h = rng.uniform_int(min_h, max_h);
    Draft d;
    d.rect = {cx - w / 2, cy - h / 2, cx - w / 2 + w, cy - h / 2 + h};
    const int rows_z = k > 4 ? 2 : 1;
    const int ymid = rows_z == 2 ? d.rect.y0 + h / 2 + rng.uniform_int(-h / 10, h / 10) : d.rect.y1;
    for (int r = 0; r < rows_z; ++r) {
      const int m = r == 0 ? per_row : k - per_row;
      const int y0 = r == 0 ? d.rect.y0 : ymid;
      const int y1 = r == 0 ? ymid : d.rect.y1;
      // cut positions with every strip at least 36 px wide
      std::vector<int> cuts{d.rect.x0};
      const int slack = w - 36 * m;
      std::vector<int> extra(std::size_t(m), 0);
      for (int s = 0; s < slack; ++s) ++extra[std::size_t(rng.uniform_int(0, m - 1))];
      int x = d.rect.x0;
      for (int s = 0; s < m; ++s) {
        x += 36 + extra[std::size_t(s)];
        cuts.push_back(s == m - 1 ? d.rect.x1 : x);
      }
      for (int s = 0; s < m; ++s) d.zones.push_back({cuts[std::size_t(s)], y0, cuts[std::size_t(s) + 1], y1});
    }
    if (rng.bernoulli(0.5)) {
      const int z = rng.uniform_int(0, int(d.zones.size()) - 1);
      const BBox& zb = d.zones[std::size_t(z)];
      const int room = std::min(zb.width(), zb.height());
      if (room >= 40) {
        d.bolt_zone = z;
        d.bolt_radius = std::min(14, room / 2 - 8);
      }
    }
    drafts.push_back(std::move(d));
  }
  // ids follow the reading order of the ink boxes, as extraction assigns them
  std::vector<std::size_t> order(drafts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const BBox& ra = drafts[a].rect;
    const BBox& rb = drafts[b].rect;
    return ra.y0 < rb.y0 || (ra.y0 == rb.y0 && ra.x0 < rb.x0);
  });
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const Draft& d = drafts[order[idx]];
    BinaryRaster local(spec.width, spec.height);
    const BBox& R = d.rect;
    const std::vector<PointF> outline{{double(R.x0), double(R.y0)}, {double(R.x1), double(R.y0)},
                                      {double(R.x1), double(R.y1)}, {double(R.x0), double(R.y1)},
                                      {double(R.x0), double(R.y0)}};
    draw_polyline(local, outline);
    for (const BBox& z : d.zones) {
      if (z.x0 != R.x0) draw_line(local, {double(z.x0), double(z.y0)}, {double(z.x0), double(z.y1)});
      if (z.y0 != R.y0) draw_line(local, {double(z.x0), double(z.y0)}, {double(z.x1), double(z.y0)});
    }
    if (d.bolt_zone >= 0) {
      const PointF c = d.zones[std::size_t(d.bolt_zone)].center();
      std::vector<PointF> circle;
      for (int a = 0; a <= 48; ++a) {
        const double t = 2.0 * std::numbers::pi * a / 48.0;
        circle.push_back(c + PointF(std::cos(t), std::sin(t)) * d.bolt_radius);
      }
      draw_polyline(local, circle);
    }
    PlacedTemplate pt;
    pt.rect = R;
    pt.ink = R.expanded(int(std::floor(kPenRadius)));
    const Point o{pt.ink.x0, pt.ink.y0};
    ZoneMap zm{"T" + std::to_string(idx), {}};
    for (std::size_t zi = 0; zi < d.zones.size(); ++zi) {
      const BBox& z = d.zones[zi];
      zm.zones.push_back({"Z" + std::to_string(zi + 1),
                          {{z.x0 - o.x, z.y0 - o.y}, {z.x1 - o.x, z.y0 - o.y}, {z.x1 - o.x, z.y1 - o.y},
                           {z.x0 - o.x, z.y1 - o.y}}});
    }
    rasters.push_back(local.crop(pt.ink));
    canvas.paste(rasters.back(), o);
    maps.push_back(std::move(zm));
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace

SceneLayout generate_layout(const SceneSpec& spec) {
  spec.validate();
  SceneLayout layout;
  layout.static_raster = BinaryRaster(spec.width, spec.height);
  std::vector<BinaryRaster> rasters;
  const auto placed = placed_templates(spec, layout.static_raster, layout.zone_maps, rasters);
  layout.templates.set_id = spec.set_id;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    layout.templates.templates.push_back({rasters[i], placed[i].ink, layout.zone_maps[i].template_id});
    layout.placements.push_back({layout.zone_maps[i].template_id, {placed[i].ink.x0, placed[i].ink.y0},
                                 placed[i].ink.width(), placed[i].ink.height()});
  }
  return layout;
}

// ---------------------------------------------------------------------------
// Code patches

namespace {

bool touches(const BinaryRaster& canvas, const BinaryRaster& glyph, Point at) {
  for (int y = 0; y < glyph.height(); ++y) {
    for (int x = 0; x < glyph.width(); ++x) {
      if (!glyph.at(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (canvas.at_or_zero(at.x + x + dx, at.y + y + dy)) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace

CodePatch render_code_patch(const SyntheticFont& font, const std::string& code, Rng& rng, int fuse_at) {
  if (code.empty()) throw Error(ErrorCode::InvalidArgument, "cannot render an empty code");
  if (fuse_at >= int(code.size()) - 1) throw Error(ErrorCode::InvalidArgument, "fuse_at out of range");
  std::vector<BinaryRaster> glyphs;
  int max_h = 0;
  int total_w = 0;
  for (char c : code) {
    const double rot = rng.uniform(-10.0, 10.0);
    const double scale = rng.uniform(0.85, 1.15);
    glyphs.push_back(font.render(c, rot, scale));
    max_h = std::max(max_h, glyphs.back().height());
    total_w += glyphs.back().width() + 8;
  }
  const int pad = 2;
  BinaryRaster canvas(total_w + 2 * pad, max_h + 2 * pad + 2);
  std::vector<BBox> boxes;
  int cursor = pad;
  for (std::size_t i = 0; i < glyphs.size(); ++i) {
    const BinaryRaster& g = glyphs[i];
    const int y = pad + (max_h - g.height()) / 2 + rng.uniform_int(0, 2);
    int x = cursor;
    if (fuse_at >= 0 && int(i) == fuse_at + 1) {
      // slide left until the two glyphs touch
      x = boxes.back().x1 - 1;
      while (!touches(canvas, g, {x, y}) && x > boxes.back().x0 + 4) --x;
      if (!touches(canvas, g, {x, y})) throw Error(ErrorCode::GenerationInfeasible, "could not fuse glyph pair");
    } else if (i > 0) {
      x = cursor + rng.uniform_int(5, 8);
    }
    canvas.paste(g, {x, y});
    boxes.push_back({x, y, x + g.width() - 1, y + g.height() - 1});
    cursor = x + g.width();
  }
  BBox ink = boxes.front();
  for (const BBox& b : boxes) ink = ink.united(b);
  CodePatch out;
  out.raster = canvas.crop(ink);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const BBox b{boxes[i].x0 - ink.x0, boxes[i].y0 - ink.y0, boxes[i].x1 - ink.x0, boxes[i].y1 - ink.y0};
    if (fuse_at >= 0 && int(i) == fuse_at + 1) {
      out.glyphs.back().text.push_back(code[i]);
      out.glyphs.back().bbox = out.glyphs.back().bbox.united(b);
    } else {
      out.glyphs.push_back({std::string(1, code[i]), b});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sheets

namespace {

struct Shape {
  bool is_box = false;
  PointF a;
  PointF b;
  BBox box;
};

double seg_seg_distance(PointF p1, PointF p2, PointF q1, PointF q2) {
  auto pt_seg = [](PointF p, PointF a, PointF b) {
    const PointF ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = len2 > 0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    return distance(p, a + ab * t);
  };
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return 0.0;
  return std::min({pt_seg(p1, q1, q2), pt_seg(p2, q1, q2), pt_seg(q1, p1, p2), pt_seg(q2, p1, p2)});
}

double seg_box_distance(PointF a, PointF b, const BBox& box) {
  if (box.contains(Point{int(std::lround(a.x)), int(std::lround(a.y))})) return 0.0;
  const PointF c00(box.x0, box.y0), c10(box.x1, box.y0), c11(box.x1, box.y1), c01(box.x0, box.y1);
  return std::min({seg_seg_distance(a, b, c00, c10), seg_seg_distance(a, b, c10, c11),
                   seg_seg_distance(a, b, c11, c01), seg_seg_distance(a, b, c01, c00)});
}

double box_box_distance(const BBox& p, const BBox& q) {
  const double dx = std::max({0, p.x0 - q.x1, q.x0 - p.x1});
  const double dy = std::max({0, p.y0 - q.y1, q.y0 - p.y1});
  return std::hypot(dx, dy);
}

double shape_distance(const Shape& s, const Shape& t) {
  if (s.is_box && t.is_box) return box_box_distance(s.box, t.box);
  if (s.is_box) return seg_box_distance(t.a, t.b, s.box);
  if (t.is_box) return seg_box_distance(s.a, s.b, t.box);
  return seg_seg_distance(s.a, s.b, t.a, t.b);
}

Shape seg_shape(PointF a, PointF b) { return {false, a, b, {}}; }
Shape box_shape(const BBox& b) { return {true, {}, {}, b}; }

std::vector<PointF> wobbly_line(PointF a, PointF b, double jitter, Rng& rng) {
  if (jitter <= 0.0) return {a, b};
  const PointF n = unit(perp(b - a));
  std::vector<PointF> pts{a};
  for (int i = 1; i <= 3; ++i) pts.push_back(a + (b - a) * (i / 4.0) + n * rng.uniform(-jitter, jitter));
  pts.push_back(b);
  return pts;
}

std::vector<PointF> cloud_outline(PointF c, double ra, double rb, double jitter, Rng& rng) {
  const int n = 64;
  std::vector<double> wob(n);
  for (double& w : wob) w = jitter > 0 ? rng.uniform(-jitter, jitter) : 0.0;
  std::vector<PointF> pts;
  for (int i = 0; i <= n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const double bump = 1.5 * std::abs(std::sin(5.0 * t)) + wob[std::size_t(i % n)];
    pts.push_back(c + PointF((ra + bump) * std::cos(t), (rb + bump) * std::sin(t)));
  }
  return pts;
}

}  // namespace

GeneratedSheet generate_sheet(const SceneSpec& spec, const SceneLayout& layout, std::uint64_t sheet_seed,
                              const std::string& sheet_id) {
  spec.validate();
  const SyntheticFont& font = SyntheticFont::standard();
  static const std::vector<std::string> codes = enumerate_codes(SyntheticFont::standard());
  Rng rng(sheet_seed);
  GeneratedSheet out;
  out.raster = layout.static_raster;
  GroundTruth& gt = out.truth;
  gt.sheet_id = sheet_id;
  gt.seed = sheet_seed;
  gt.width = spec.width;
  gt.height = spec.height;
  gt.templates = layout.placements;
  gt.static_raster = layout.static_raster;
  gt.cloud_raster = BinaryRaster(spec.width, spec.height);

  std::vector<Shape> taken;
  std::vector<Shape> template_shapes;
  for (const auto& p : layout.placements) {
    template_shapes.push_back(box_shape({p.origin.x, p.origin.y, p.origin.x + p.width - 1, p.origin.y + p.height - 1}));
  }
  const BBox canvas_inner{10, 10, spec.width - 11, spec.height - 11};
  BinaryRaster& sheet = out.raster;

  for (std::size_t ti = 0; ti < layout.placements.size(); ++ti) {
    const TemplatePlacement& tp = layout.placements[ti];
    const ZoneMap& zm = layout.zone_maps[ti];
    for (int a = 0; a < spec.annotations; ++a) {
      bool placed = false;
      for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
        const int zi = rng.uniform_int(0, int(zm.zones.size()) - 1);
        const ZonePolygon& zone = zm.zones[std::size_t(zi)];
        // outer edges of the zone, in sheet coordinates
        std::vector<Edge> edges;
        {
          BBox zb{zone.vertices[0].x, zone.vertices[0].y, zone.vertices[2].x, zone.vertices[2].y};
          const int W = tp.width - 1 - 1;
          const int H = tp.height - 1 - 1;
          const PointF o(tp.origin);
          auto add = [&](int x0, int y0, int x1, int y1, PointF inward) {
            edges.push_back({o + PointF(x0, y0), o + PointF(x1, y1), inward});
          };
          if (zb.y0 == 1) add(zb.x0, zb.y0, zb.x1, zb.y0, {0, 1});
          if (zb.y1 == H) add(zb.x0, zb.y1, zb.x1, zb.y1, {0, -1});
          if (zb.x0 == 1) add(zb.x0, zb.y0, zb.x0, zb.y1, {1, 0});
          if (zb.x1 == W) add(zb.x1, zb.y0, zb.x1, zb.y1, {-1, 0});
        }
        if (edges.empty()) continue;
        const Edge& e = edges[std::size_t(rng.uniform_int(0, int(edges.size()) - 1))];
        const PointF target = e.a + (e.b - e.a) * rng.uniform(0.25, 0.75);
        const double theta = rng.uniform(-30.0, 30.0);
        const PointF dir = rotate(e.inward, theta);  // tail -> head
        const double offset = rng.uniform(8.0, 14.0);
        const PointF head = target - dir * (offset / std::cos(theta * std::numbers::pi / 180.0));
        const PointF tail = head - dir * rng.uniform(90.0, 180.0);
        const std::string code = codes[std::size_t(rng.uniform_int(0, int(codes.size()) - 1))];
        const bool fuse = code.size() >= 2 && rng.bernoulli(spec.noise.fused_pair);
        const int fuse_at = fuse ? rng.uniform_int(0, int(code.size()) - 2) : -1;
        const bool arrow = !rng.bernoulli(spec.noise.headless_line);
        const bool cloud = rng.bernoulli(spec.noise.cloud);
        CodePatch patch = render_code_patch(font, code, rng, fuse_at);
        const double w = patch.raster.width();
        const double h = patch.raster.height();
        const PointF u = unit(tail - head);
        double along;
        double ra = 0.0;
        double rb = 0.0;
        if (cloud) {
          ra = 0.71 * w + 8.0;
          rb = 0.71 * h + 8.0;
          along = 1.0 / std::hypot(u.x / ra, u.y / rb) + 6.0 + 2.0 * spec.noise.stroke_jitter;
        } else {
          along = 0.5 * w * std::abs(u.x) + 0.5 * h * std::abs(u.y) + rng.uniform(10.0, 30.0);
        }
        const PointF centre = tail + u * along;
        const Point at{int(std::lround(centre.x - w / 2.0)), int(std::lround(centre.y - h / 2.0))};
        const BBox code_box{at.x, at.y, at.x + int(w) - 1, at.y + int(h) - 1};
        const BBox cloud_box = cloud ? BBox{int(std::floor(centre.x - ra - 6)), int(std::floor(centre.y - rb - 6)),
                                            int(std::ceil(centre.x + ra + 6)), int(std::ceil(centre.y + rb + 6))}
                                     : code_box;
        const PointF side = perp(dir) * 12.0;
        const PointF base = head - dir * 24.0;
        std::vector<Shape> mine{seg_shape(tail, head), box_shape(code_box)};
        if (arrow) {
          mine.push_back(seg_shape(base + side, base - side));
          mine.push_back(seg_shape(base + side, head));
          mine.push_back(seg_shape(base - side, head));
        }
        if (cloud) mine.push_back(box_shape(cloud_box));

        bool ok = canvas_inner.contains(cloud_box) && canvas_inner.contains(code_box);
        for (const Shape& s : mine) {
          if (!ok) break;
          if (!s.is_box) {
            ok = canvas_inner.contains(Point{int(std::lround(s.a.x)), int(std::lround(s.a.y))}) &&
                 canvas_inner.contains(Point{int(std::lround(s.b.x)), int(std::lround(s.b.y))});
          }
          for (const Shape& t : template_shapes) {
            if (!ok) break;
            ok = shape_distance(s, t) >= (s.is_box ? 20.0 : 6.0);
          }
          for (const Shape& t : taken) {
            if (!ok) break;
            ok = shape_distance(s, t) >= 24.0;
          }
        }
        if (!ok) continue;

        draw_polyline(sheet, wobbly_line(tail, arrow ? base : head, spec.noise.stroke_jitter, rng));
        if (arrow) {
          fill_triangle(sheet, head, base + side, base - side);
          draw_polyline(sheet, {head, base + side, base - side, head});
        }
        sheet.paste(patch.raster, at);
        if (cloud) {
          const auto outline = cloud_outline(centre, ra, rb, spec.noise.stroke_jitter, rng);
          draw_polyline(sheet, outline);
          draw_polyline(gt.cloud_raster, outline);
        }
        AnnotationTruth ann;
        ann.template_id = tp.template_id;
        ann.zone_id = zone.zone_id;
        ann.code = code;
        ann.head = head;
        ann.tail = tail;
        ann.patch_bbox = code_box;
        for (auto g : patch.glyphs) {
          g.bbox = {g.bbox.x0 + at.x, g.bbox.y0 + at.y, g.bbox.x1 + at.x, g.bbox.y1 + at.y};
          ann.glyphs.push_back(std::move(g));
        }
        ann.arrow_head = arrow;
        ann.cloud = cloud;
        ann.fused = fuse;
        gt.annotations.push_back(std::move(ann));
        taken.insert(taken.end(), mine.begin(), mine.end());
        placed = true;
      }
      if (!placed) {
        throw Error(ErrorCode::GenerationInfeasible,
                    "no room for annotation " + std::to_string(a) + " of template " + tp.template_id);
      }
    }
  }

  if (spec.noise.salt_pepper > 0.0) {
    const auto threshold = std::uint64_t(spec.noise.salt_pepper * 18446744073709551615.0);
    for (int y = 0; y < sheet.height(); ++y) {
      for (int x = 0; x < sheet.width(); ++x) {
        if (rng.next() < threshold) sheet.set(x, y, !sheet.at(x, y));
      }
    }
  }
  return out;
}

GeneratedSheet generate_sheet(const SceneSpec& spec) {
  const SceneLayout layout = generate_layout(spec);
  return generate_sheet(spec, layout, spec.seed, spec.set_id + "_0000");
}

std::vector<GeneratedSheet> generate_set(const SceneSpec& spec, int sheet_count) {
  if (sheet_count < 1) throw Error(ErrorCode::InvalidArgument, "sheet_count must be >= 1");
  const SceneLayout layout = generate_layout(spec);
  std::vector<GeneratedSheet> sheets;
  for (int i = 0; i < sheet_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "_%04d", i);
    sheets.push_back(generate_sheet(spec, layout, mix_seed(spec.seed, std::uint64_t(i)), spec.set_id + id));
  }
  return sheets;
}

// ---------------------------------------------------------------------------
// Ground-truth records

namespace {

using ojson = nlohmann::ordered_json;

ojson box_json(const BBox& b) { return ojson::array({b.x0, b.y0, b.x1, b.y1}); }
BBox box_from(const ojson& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }
ojson point_json(PointF p) { return ojson::array({p.x, p.y}); }
PointF point_from(const ojson& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

std::string truth_to_json(const GroundTruth& gt) {
  ojson j;
  j["sheet_id"] = gt.sheet_id;
  j["seed"] = gt.seed;
  j["width"] = gt.width;
  j["height"] = gt.height;
  j["templates"] = ojson::array();
  for (const auto& t : gt.templates) {
    j["templates"].push_back({{"template_id", t.template_id},
                              {"origin", ojson::array({t.origin.x, t.origin.y})},
                              {"width", t.width},
                              {"height", t.height}});
  }
  j["annotations"] = ojson::array();
  for (const auto& a : gt.annotations) {
    ojson g = ojson::array();
    for (const auto& glyph : a.glyphs) g.push_back({{"text", glyph.text}, {"bbox", box_json(glyph.bbox)}});
    j["annotations"].push_back({{"template_id", a.template_id},
                                {"zone_id", a.zone_id},
                                {"code", a.code},
                                {"head", point_json(a.head)},
                                {"tail", point_json(a.tail)},
                                {"patch_bbox", box_json(a.patch_bbox)},
                                {"arrow_head", a.arrow_head},
                                {"cloud", a.cloud},
                                {"fused", a.fused},
                                {"glyphs", g}});
  }
  return j.dump(2) + "\n";
}

GroundTruth truth_from_json(const std::string& text) {
  GroundTruth gt;
  try {
    const ojson j = ojson::parse(text);
    gt.sheet_id = j.at("sheet_id").get<std::string>();
    gt.seed = j.at("seed").get<std::uint64_t>();
    gt.width = j.at("width").get<int>();
    gt.height = j.at("height").get<int>();
    for (const auto& t : j.at("templates")) {
      gt.templates.push_back({t.at("template_id").get<std::string>(),
                              {t.at("origin").at(0).get<int>(), t.at("origin").at(1).get<int>()},
                              t.at("width").get<int>(),
                              t.at("height").get<int>()});
    }
    for (const auto& a : j.at("annotations")) {
      AnnotationTruth ann;
      ann.template_id = a.at("template_id").get<std::string>();
      ann.zone_id = a.at("zone_id").get<std::string>();
      ann.code = a.at("code").get<std::string>();
      ann.head = point_from(a.at("head"));
      ann.tail = point_from(a.at("tail"));
      ann.patch_bbox = box_from(a.at("patch_bbox"));
      ann.arrow_head = a.at("arrow_head").get<bool>();
      ann.cloud = a.at("cloud").get<bool>();
      ann.fused = a.at("fused").get<bool>();
      for (const auto& g : a.at("glyphs")) ann.glyphs.push_back({g.at("text").get<std::string>(), box_from(g.at("bbox"))});
      gt.annotations.push_back(std::move(ann));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("ground truth: ") + e.what());
  }
  return gt;
}

void save_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << truth_to_json(gt);
}

GroundTruth load_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return truth_from_json(ss.str());
}

}  // namespace sheetscan
