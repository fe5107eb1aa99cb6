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

#include <bitset>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sheetscan/assoc.hpp"
#include "sheetscan/raster.hpp"

namespace sheetscan {

/// One CCA piece of a text patch with its extremes and centroid.
struct Segment {
  std::vector<Point> pixels;
  int x_left = 0;
  int x_right = 0;
  int y_top = 0;
  int y_bottom = 0;
  double x_cen = 0.0;
  double y_cen = 0.0;

  static Segment from_pixels(std::vector<Point> pixels);
  int width() const { return x_right - x_left + 1; }
  int height() const { return y_bottom - y_top + 1; }
};

inline constexpr int kGlyphSize = 32;
inline constexpr std::size_t kAlphabetSize = 31;
using GlyphBits = std::bitset<kGlyphSize * kGlyphSize>;

/// Aspect-preserving pad to a square, then nearest-sample to 32x32.
GlyphBits normalize_glyph(std::span<const Point> pixels);
GlyphBits normalize_glyph(const BinaryRaster& glyph);
/// 3x3 dilation on the 32x32 grid.
GlyphBits dilate_glyph(const GlyphBits& bits);

class Alphabet {
 public:
  struct Glyph {
    char symbol;
    BinaryRaster source;  // as loaded, inverted convention
    GlyphBits reference;  // normalized 32x32
  };

  /// Exactly 31 distinct symbols, including '(', ')' and 'B'.
  explicit Alphabet(std::vector<std::pair<char, BinaryRaster>> glyphs);

  /// One PGM per symbol named by its decimal code point (e.g. 40.pgm for '(').
  static Alphabet load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  const std::vector<Glyph>& glyphs() const { return glyphs_; }
  std::size_t size() const { return glyphs_.size(); }
  bool contains(char c) const;
  std::string symbols() const;

 private:
  std::vector<Glyph> glyphs_;
};

/// Two-step recognition contract. Step one (pair-capable) either names the two
/// characters of an overlapping pair or answers None; step two reads a single
/// character.
class SegmentClassifier {
 public:
  virtual ~SegmentClassifier() = default;
  virtual std::string id() const = 0;
  virtual const Alphabet& alphabet() const = 0;
  virtual std::optional<std::pair<char, char>> classify_pair(const Segment& s) const = 0;
  virtual char classify_single(const Segment& s) const = 0;
};

/// Nearest reference over 32x32 bitmaps. The distance counts ink of either
/// bitmap that is more than one cell away from ink of the other, so stroke
/// weight and one-cell shifts cost nothing; plain Hamming distance breaks
/// ties. References are the alphabet glyphs at a fan of rotations. Segments
/// wider than pair_aspect x height are read as two characters, cut at the
/// column of their middle band whose halves match the references best.
class NearestCentroidClassifier final : public SegmentClassifier {
 public:
  struct Params {
    double pair_aspect = 1.05;
    double max_rotation = 10.0;  // degrees
    double rotation_step = 2.5;
  };

  explicit NearestCentroidClassifier(Alphabet alphabet);
  NearestCentroidClassifier(Alphabet alphabet, Params params);

  std::string id() const override { return "nearest_centroid"; }
  const Alphabet& alphabet() const override { return alphabet_; }
  std::optional<std::pair<char, char>> classify_pair(const Segment& s) const override;
  char classify_single(const Segment& s) const override;

  /// Best symbol and its distance.
  std::pair<char, int> nearest(const GlyphBits& bits) const;

 private:
  struct Reference {
    char symbol;
    GlyphBits bits;
    GlyphBits grown;
  };

  Alphabet alphabet_;
  Params params_;
  std::vector<Reference> references_;
};

struct SegmentReading {
  bool pair = false;
  char first = 0;
  char second = 0;

  std::string text() const { return pair ? std::string{first, second} : std::string{first}; }
};

SegmentReading classify_segment(const Segment& s, const SegmentClassifier& clf);

/// Literal characters plus '?' as a single-character wildcard. A '?' in the
/// replacement copies the wildcard captures in order.
struct RewriteRule {
  std::string pattern;
  std::string replacement;
};

struct Lexicon {
  std::vector<std::string> codes;  // sorted, unique
  std::vector<RewriteRule> rules;

  bool contains(const std::string& code) const;
};

/// One code per line.
std::vector<std::string> load_codes(const std::filesystem::path& path);
/// Ordered `pattern -> replacement` lines.
std::vector<RewriteRule> load_rules(const std::filesystem::path& path);
Lexicon load_lexicon(const std::filesystem::path& codes_file, const std::filesystem::path& rules_file);

/// Applies every rule in order, each left to right over non-overlapping
/// matches. Returns the rewritten string and the number of rewrites made.
std::pair<std::string, int> apply_rules(const std::string& raw, std::span<const RewriteRule> rules);

int levenshtein(const std::string& a, const std::string& b);

struct DamageCode {
  std::string text;
  double confidence = 0.0;
  int corrections_applied = 0;
  bool resolved = false;
};

/// Grammar rewrites, then the nearest lexicon code by edit distance (ties to
/// the lexicographically smallest). Unresolved when the distance exceeds max_edit.
DamageCode correct_sequence(const std::string& raw, const Lexicon& lex, int max_edit = 2);

std::vector<Segment> segment_patch(const TextPatch& p);

/// Reading order: sort by vertical centre, open a new line whenever a segment's
/// top lies more than overlap_thresh below the running line mark, order each
/// line by x_left.
std::vector<Segment> rank_segments(std::vector<Segment> segs, double overlap_thresh);

/// Half the median segment height; 0 for an empty list.
double default_overlap_thresh(std::span<const Segment> segs);

struct ReadOptions {
  std::optional<double> overlap_thresh;  // defaults to default_overlap_thresh
  int max_edit = 2;
};

struct PatchReading {
  DamageCode code;
  std::string raw;
  int segments = 0;
  bool empty_patch = false;
  bool blank_segment = false;
  double micros_segment = 0.0;
  double micros_rank = 0.0;
  double micros_classify = 0.0;
  double micros_correct = 0.0;
};

PatchReading read_patch(const TextPatch& p, const SegmentClassifier& clf, const Lexicon& lex,
                        const ReadOptions& opts = {});

}  // namespace sheetscan
