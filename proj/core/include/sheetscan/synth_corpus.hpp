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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sheetscan/code_reader.hpp"
#include "sheetscan/raster.hpp"
#include "sheetscan/template_ops.hpp"
#include "sheetscan/zone_mapping.hpp"

namespace sheetscan {

/// Seeded generator with a fixed mapping from engine output to values, so
/// corpora do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// Stroke font for the synthetic glyph set: ten digits, nineteen capitals and
/// both parentheses. Strokes are polylines in a 24 px tall box.
class SyntheticFont {
 public:
  using Stroke = std::vector<PointF>;

  static const SyntheticFont& standard();

  const std::string& symbols() const { return symbols_; }
  std::string letters() const;
  std::string digits() const;
  const std::vector<Stroke>& strokes(char symbol) const;
  double advance(char symbol) const;

  /// Glyph rotated by rotation_deg and scaled about its centre, cropped to its ink.
  BinaryRaster render(char symbol, double rotation_deg = 0.0, double scale = 1.0) const;
  /// Unjittered renderings of every symbol.
  Alphabet alphabet() const;

 private:
  SyntheticFont();
  std::string symbols_;
  std::vector<std::vector<Stroke>> strokes_;
  std::vector<double> widths_;
};

inline constexpr double kPenRadius = 1.5;

/// Thick-pen rasterization helpers (pen = disc of kPenRadius).
void draw_line(BinaryRaster& r, PointF a, PointF b, double pen = kPenRadius);
void draw_polyline(BinaryRaster& r, const std::vector<PointF>& pts, double pen = kPenRadius);
void fill_triangle(BinaryRaster& r, PointF a, PointF b, PointF c);

/// digit letter, digit letter digit, and (letter) over the font's symbols.
std::vector<std::string> enumerate_codes(const SyntheticFont& font);
/// Grammar rewrites that undo the fused-parenthesis misreads.
std::vector<RewriteRule> default_rules();

struct NoiseSpec {
  double stroke_jitter = 0.0;  // px, perpendicular wobble of hand-drawn lines
  double salt_pepper = 0.0;    // fraction of pixels flipped
  double fused_pair = 0.0;     // probability that a code has two touching glyphs
  double headless_line = 0.0;  // probability that a connector has no arrow head
  double cloud = 0.0;          // probability that a code is enclosed by a cloud
};

struct SceneSpec {
  std::uint64_t seed = 1;
  /// Seeds the static layout shared by every sheet of a set.
  std::uint64_t layout_seed = 7;
  std::string set_id = "synthetic";
  int width = 1750;
  int height = 1200;
  int template_count = 4;
  int zones_per_template = 4;
  int annotations = 3;  // per template
  NoiseSpec noise;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Parses a key=value scene description; unknown keys are rejected.
SceneSpec load_scene_spec(const std::filesystem::path& path);
SceneSpec parse_scene_spec(const std::string& text, const std::string& source = "<string>");

struct GlyphTruth {
  std::string text;  // one symbol, or two for a fused pair
  BBox bbox;
};

struct AnnotationTruth {
  std::string template_id;
  std::string zone_id;
  std::string code;
  PointF head;
  PointF tail;
  BBox patch_bbox;
  std::vector<GlyphTruth> glyphs;
  bool arrow_head = true;
  bool cloud = false;
  bool fused = false;
};

struct TemplatePlacement {
  std::string template_id;
  Point origin;  // top-left of the template's ink box on the sheet
  int width = 0;
  int height = 0;
};

struct GroundTruth {
  std::string sheet_id;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  std::vector<TemplatePlacement> templates;
  std::vector<AnnotationTruth> annotations;
  /// In memory only.
  BinaryRaster static_raster{1, 1};
  BinaryRaster cloud_raster{1, 1};
};

/// Static diagrams and their zone maps, shared by a set.
struct SceneLayout {
  TemplateSet templates;
  std::vector<ZoneMap> zone_maps;
  std::vector<TemplatePlacement> placements;
  BinaryRaster static_raster{1, 1};
};

SceneLayout generate_layout(const SceneSpec& spec);

struct GeneratedSheet {
  BinaryRaster raster{1, 1};
  GroundTruth truth;
};

/// One sheet seeded by spec.seed. Throws GenerationInfeasible when the
/// annotations cannot be packed.
GeneratedSheet generate_sheet(const SceneSpec& spec);
GeneratedSheet generate_sheet(const SceneSpec& spec, const SceneLayout& layout, std::uint64_t sheet_seed,
                              const std::string& sheet_id);
/// Sheets share the layout; sheet i is seeded with mix_seed(spec.seed, i).
std::vector<GeneratedSheet> generate_set(const SceneSpec& spec, int sheet_count);

struct CodePatch {
  BinaryRaster raster{1, 1};
  std::vector<GlyphTruth> glyphs;  // patch coordinates
};

/// Renders a code on one line with per-glyph jitter. fuse_at = i joins
/// glyphs i and i + 1 so that their ink touches; -1 keeps all apart.
CodePatch render_code_patch(const SyntheticFont& font, const std::string& code, Rng& rng, int fuse_at = -1);

std::string truth_to_json(const GroundTruth& gt);
GroundTruth truth_from_json(const std::string& text);
void save_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_truth(const std::filesystem::path& path);

}  // namespace sheetscan
