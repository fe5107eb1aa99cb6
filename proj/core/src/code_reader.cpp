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
#include "sheetscan/code_reader.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>

#include "sheetscan/error.hpp"
#include "sheetscan/image_io.hpp"
#include "sheetscan/kv_file.hpp"

namespace sheetscan {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

GlyphBits normalize_square(const BinaryRaster& square) {
  // 4x4 supersampling per output cell; a cell is ink when >= 5 samples are.
  const int side = square.width();
  const double scale = double(side) / kGlyphSize;
  GlyphBits out;
  for (int v = 0; v < kGlyphSize; ++v) {
    for (int u = 0; u < kGlyphSize; ++u) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          const int x = std::min(side - 1, int((u + (sx + 0.5) / 4.0) * scale));
          const int y = std::min(side - 1, int((v + (sy + 0.5) / 4.0) * scale));
          hits += square.at(x, y) ? 1 : 0;
        }
      }
      if (hits >= 5) out.set(std::size_t(v) * kGlyphSize + u);
    }
  }
  return out;
}

BinaryRaster rotate_raster(const BinaryRaster& src, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const int w = src.width();
  const int h = src.height();
  const int ow = int(std::ceil(std::abs(w * c) + std::abs(h * s))) + 2;
  const int oh = int(std::ceil(std::abs(w * s) + std::abs(h * c))) + 2;
  BinaryRaster out(ow, oh);
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double ocx = (ow - 1) / 2.0;
  const double ocy = (oh - 1) / 2.0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      // inverse rotation back into the source
      const double dx = x - ocx;
      const double dy = y - ocy;
      const int sx = int(std::lround(c * dx + s * dy + cx));
      const int sy = int(std::lround(-s * dx + c * dy + cy));
      if (src.at_or_zero(sx, sy)) out.set(x, y);
    }
  }
  return out;
}

std::vector<Point> ink_pixels(const BinaryRaster& r) {
  std::vector<Point> px;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (r.at(x, y)) px.push_back({x, y});
    }
  }
  return px;
}

// Drops slivers of the neighbouring glyph left over after a cut.
std::vector<Point> main_pieces(const std::vector<Point>& pixels) {
  if (pixels.empty()) return pixels;
  const ConnectedComponent hull = make_component(pixels);
  BinaryRaster local(hull.bbox.width(), hull.bbox.height());
  for (const Point& p : pixels) local.set(p.x - hull.bbox.x0, p.y - hull.bbox.y0);
  const auto parts = connected_components(local, Connectivity::Eight);
  std::size_t largest = 0;
  for (const auto& part : parts) largest = std::max(largest, part.pixels.size());
  std::vector<Point> kept;
  for (const auto& part : parts) {
    if (part.pixels.size() * 100 < largest * 15) continue;
    for (const Point& p : part.pixels) kept.push_back({p.x + hull.bbox.x0, p.y + hull.bbox.y0});
  }
  return kept;
}

}  // namespace

GlyphBits dilate_glyph(const GlyphBits& bits) {
  static const GlyphBits not_first = [] {
    GlyphBits m;
    for (int v = 0; v < kGlyphSize; ++v) {
      for (int u = 1; u < kGlyphSize; ++u) m.set(std::size_t(v) * kGlyphSize + u);
    }
    return m;
  }();
  static const GlyphBits not_last = not_first >> 1;
  // bit index = v * 32 + u, so << 1 moves ink one column right
  const GlyphBits row = bits | ((bits << 1) & not_first) | ((bits >> 1) & not_last);
  return row | (row << kGlyphSize) | (row >> kGlyphSize);
}

Segment Segment::from_pixels(std::vector<Point> pixels) {
  if (pixels.empty()) throw Error(ErrorCode::BlankSegment, "segment has no pixels");
  const ConnectedComponent c = make_component(std::move(pixels));
  Segment s;
  s.x_left = c.bbox.x0;
  s.x_right = c.bbox.x1;
  s.y_top = c.bbox.y0;
  s.y_bottom = c.bbox.y1;
  s.x_cen = c.centroid.x;
  s.y_cen = c.centroid.y;
  s.pixels = c.pixels;
  return s;
}

GlyphBits normalize_glyph(std::span<const Point> pixels) {
  if (pixels.empty()) throw Error(ErrorCode::BlankSegment, "cannot normalize an empty glyph");
  BBox b{pixels[0].x, pixels[0].y, pixels[0].x, pixels[0].y};
  for (const Point& p : pixels) b = b.united({p.x, p.y, p.x, p.y});
  const int side = std::max(b.width(), b.height());
  const int ox = (side - b.width()) / 2;
  const int oy = (side - b.height()) / 2;
  BinaryRaster square(side, side);
  for (const Point& p : pixels) square.set(p.x - b.x0 + ox, p.y - b.y0 + oy);
  return normalize_square(square);
}

GlyphBits normalize_glyph(const BinaryRaster& glyph) {
  const auto px = ink_pixels(glyph);
  return normalize_glyph(std::span<const Point>(px));
}

Alphabet::Alphabet(std::vector<std::pair<char, BinaryRaster>> glyphs) {
  std::set<char> seen;
  for (auto& [symbol, raster] : glyphs) {
    if (!seen.insert(symbol).second) {
      throw Error(ErrorCode::InvalidArgument, std::string("duplicate glyph '") + symbol + "'");
    }
    if (raster.count() == 0) throw Error(ErrorCode::InvalidArgument, std::string("glyph '") + symbol + "' is blank");
    GlyphBits ref = normalize_glyph(raster);
    glyphs_.push_back({symbol, std::move(raster), ref});
  }
  if (glyphs_.size() != kAlphabetSize) {
    throw Error(ErrorCode::InvalidArgument,
                "alphabet must hold exactly 31 symbols, got " + std::to_string(glyphs_.size()));
  }
  for (char required : {'(', ')', 'B'}) {
    if (!seen.count(required)) {
      throw Error(ErrorCode::InvalidArgument, std::string("alphabet lacks required symbol '") + required + "'");
    }
  }
  std::sort(glyphs_.begin(), glyphs_.end(), [](const Glyph& a, const Glyph& b) { return a.symbol < b.symbol; });
}

Alphabet Alphabet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "no glyph directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<char, BinaryRaster>> glyphs;
  for (const auto& f : files) {
    int code = 0;
    try {
      std::size_t used = 0;
      code = std::stoi(f.stem().string(), &used);
      if (used != f.stem().string().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "glyph file name is not a code point: " + f.filename().string());
    }
    if (code < 33 || code > 126) throw Error(ErrorCode::ParseError, "glyph code point out of range: " + f.string());
    glyphs.emplace_back(char(code), read_binary_pgm(f));
  }
  return Alphabet(std::move(glyphs));
}

void Alphabet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& g : glyphs_) write_binary_pgm(g.source, dir / (std::to_string(int(g.symbol)) + ".pgm"));
}

bool Alphabet::contains(char c) const {
  return std::any_of(glyphs_.begin(), glyphs_.end(), [c](const Glyph& g) { return g.symbol == c; });
}

std::string Alphabet::symbols() const {
  std::string s;
  for (const auto& g : glyphs_) s.push_back(g.symbol);
  return s;
}

NearestCentroidClassifier::NearestCentroidClassifier(Alphabet alphabet)
    : NearestCentroidClassifier(std::move(alphabet), Params{}) {}

NearestCentroidClassifier::NearestCentroidClassifier(Alphabet alphabet, Params params)
    : alphabet_(std::move(alphabet)), params_(params) {
  const int steps = params_.rotation_step > 0 ? int(std::floor(params_.max_rotation / params_.rotation_step)) : 0;
  for (const auto& g : alphabet_.glyphs()) {
    references_.push_back({g.symbol, g.reference, dilate_glyph(g.reference)});
    for (int i = 1; i <= steps; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const BinaryRaster rotated = rotate_raster(g.source, sign * i * params_.rotation_step);
        const GlyphBits bits = normalize_glyph(rotated);
        references_.push_back({g.symbol, bits, dilate_glyph(bits)});
      }
    }
  }
}

std::pair<char, int> NearestCentroidClassifier::nearest(const GlyphBits& bits) const {
  const GlyphBits grown = dilate_glyph(bits);
  char best = references_.front().symbol;
  int best_d = std::numeric_limits<int>::max();
  int best_h = std::numeric_limits<int>::max();
  for (const auto& r : references_) {
    const int d = int((bits & ~r.grown).count() + (r.bits & ~grown).count());
    if (d > best_d) continue;
    const int h = int((r.bits ^ bits).count());
    if (d < best_d || h < best_h) {
      best_d = d;
      best_h = h;
      best = r.symbol;
    }
  }
  return {best, best_d};
}

char NearestCentroidClassifier::classify_single(const Segment& s) const {
  if (s.pixels.empty()) throw Error(ErrorCode::BlankSegment, "segment has no pixels");
  return nearest(normalize_glyph(std::span<const Point>(s.pixels))).first;
}

std::optional<std::pair<char, char>> NearestCentroidClassifier::classify_pair(const Segment& s) const {
  if (s.pixels.empty()) throw Error(ErrorCode::BlankSegment, "segment has no pixels");
  if (double(s.width()) <= params_.pair_aspect * double(s.height())) return std::nullopt;
  std::vector<int> profile(std::size_t(s.width()), 0);
  for (const Point& p : s.pixels) ++profile[std::size_t(p.x - s.x_left)];
  const int lo = int(std::floor(0.3 * s.width()));
  const int hi = std::max(lo, int(std::ceil(0.7 * s.width())) - 1);
  const double mid = (s.width() - 1) / 2.0;
  // Every column of the band is tried; the cut whose halves best match the
  // references wins, then the thinner column, then the one nearer the middle.
  std::optional<std::pair<char, char>> best;
  int best_score = std::numeric_limits<int>::max();
  int best_cut = lo;
  for (int cut = lo; cut <= hi; ++cut) {
    std::vector<Point> left;
    std::vector<Point> right;
    for (const Point& p : s.pixels) {
      const int c = p.x - s.x_left;
      if (c < cut) left.push_back(p);
      if (c > cut) right.push_back(p);
    }
    left = main_pieces(left);
    right = main_pieces(right);
    if (left.empty() || right.empty()) continue;
    const auto l = nearest(normalize_glyph(std::span<const Point>(left)));
    const auto r = nearest(normalize_glyph(std::span<const Point>(right)));
    const int score = l.second + r.second;
    const auto pc = profile[std::size_t(cut)];
    const auto pb = profile[std::size_t(best_cut)];
    if (!best || score < best_score ||
        (score == best_score && (pc < pb || (pc == pb && std::abs(cut - mid) < std::abs(best_cut - mid))))) {
      best = std::pair{l.first, r.first};
      best_score = score;
      best_cut = cut;
    }
  }
  return best;
}

SegmentReading classify_segment(const Segment& s, const SegmentClassifier& clf) {
  if (s.pixels.empty()) throw Error(ErrorCode::BlankSegment, "segment has no pixels");
  SegmentReading out;
  if (auto pair = clf.classify_pair(s)) {
    out.pair = true;
    out.first = pair->first;
    out.second = pair->second;
  } else {
    out.first = clf.classify_single(s);
  }
  return out;
}

bool Lexicon::contains(const std::string& code) const { return std::binary_search(codes.begin(), codes.end(), code); }

std::vector<std::string> load_codes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open lexicon " + path.string());
  std::vector<std::string> codes;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty() && t[0] != '#') codes.push_back(t);
  }
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  if (codes.empty()) throw Error(ErrorCode::ParseError, "lexicon " + path.string() + " is empty");
  return codes;
}

std::vector<RewriteRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open grammar rules " + path.string());
  std::vector<RewriteRule> rules;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto arrow = t.find("->");
    if (arrow == std::string::npos) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected pattern -> replacement");
    }
    RewriteRule r{trim(t.substr(0, arrow)), trim(t.substr(arrow + 2))};
    if (r.pattern.empty()) throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": empty pattern");
    const auto wild = [](const std::string& s) { return std::count(s.begin(), s.end(), '?'); };
    if (wild(r.replacement) > wild(r.pattern)) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": replacement uses more wildcards than the pattern");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

Lexicon load_lexicon(const std::filesystem::path& codes_file, const std::filesystem::path& rules_file) {
  return Lexicon{load_codes(codes_file), load_rules(rules_file)};
}

std::pair<std::string, int> apply_rules(const std::string& raw, std::span<const RewriteRule> rules) {
  std::string cur = raw;
  int rewrites = 0;
  for (const RewriteRule& rule : rules) {
    const std::size_t n = rule.pattern.size();
    std::string next;
    std::size_t i = 0;
    while (i < cur.size()) {
      bool match = i + n <= cur.size();
      for (std::size_t j = 0; match && j < n; ++j) {
        match = rule.pattern[j] == '?' || rule.pattern[j] == cur[i + j];
      }
      if (!match) {
        next.push_back(cur[i++]);
        continue;
      }
      std::string captures;
      for (std::size_t j = 0; j < n; ++j) {
        if (rule.pattern[j] == '?') captures.push_back(cur[i + j]);
      }
      std::size_t used = 0;
      for (char ch : rule.replacement) next.push_back(ch == '?' ? captures[used++] : ch);
      const bool identical = cur.compare(i, n, next, next.size() - rule.replacement.size(), rule.replacement.size()) == 0;
      if (!identical) ++rewrites;
      i += n;
    }
    cur = std::move(next);
  }
  return {cur, rewrites};
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = int(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    int diag = row[0];
    row[0] = int(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

DamageCode correct_sequence(const std::string& raw, const Lexicon& lex, int max_edit) {
  DamageCode out;
  if (raw.empty()) return out;
  const auto [rewritten, rewrites] = apply_rules(raw, lex.rules);
  const std::string* best = nullptr;
  int best_d = 0;
  for (const auto& code : lex.codes) {  // sorted, so the first minimum is the smallest
    const int d = levenshtein(rewritten, code);
    if (best == nullptr || d < best_d) {
      best = &code;
      best_d = d;
    }
  }
  out.corrections_applied = rewrites;
  if (best == nullptr || best_d > max_edit) {
    out.text = rewritten;
    return out;
  }
  out.text = *best;
  out.resolved = true;
  out.corrections_applied += best_d;
  out.confidence = 1.0 - double(best_d) / double(std::max(rewritten.size(), best->size()));
  return out;
}

std::vector<Segment> segment_patch(const TextPatch& p) {
  std::vector<Segment> segs;
  segs.reserve(p.components.size());
  for (const auto& c : p.components) {
    if (!c.pixels.empty()) segs.push_back(Segment::from_pixels(c.pixels));
  }
  return segs;
}

std::vector<Segment> rank_segments(std::vector<Segment> segs, double overlap_thresh) {
  if (segs.size() < 2) return segs;
  std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.y_cen < b.y_cen; });
  auto by_left = [](const Segment& a, const Segment& b) { return a.x_left < b.x_left; };
  std::size_t line_begin = 0;
  int line_mark = segs[0].y_top;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].y_top - line_mark > overlap_thresh) {
      std::stable_sort(segs.begin() + std::ptrdiff_t(line_begin), segs.begin() + std::ptrdiff_t(i), by_left);
      line_begin = i;
    }
    line_mark = std::max(segs[i].y_top, line_mark);
  }
  std::stable_sort(segs.begin() + std::ptrdiff_t(line_begin), segs.end(), by_left);
  return segs;
}

double default_overlap_thresh(std::span<const Segment> segs) {
  if (segs.empty()) return 0.0;
  std::vector<int> heights;
  for (const auto& s : segs) heights.push_back(s.height());
  std::sort(heights.begin(), heights.end());
  const std::size_t n = heights.size();
  const double median = n % 2 ? heights[n / 2] : 0.5 * (heights[n / 2 - 1] + heights[n / 2]);
  return 0.5 * median;
}

PatchReading read_patch(const TextPatch& p, const SegmentClassifier& clf, const Lexicon& lex,
                        const ReadOptions& opts) {
  PatchReading out;
  auto t0 = Clock::now();
  std::vector<Segment> segs = segment_patch(p);
  out.micros_segment = micros_since(t0);
  out.segments = int(segs.size());
  if (segs.empty()) {
    out.empty_patch = true;
    return out;
  }
  t0 = Clock::now();
  const double thresh = opts.overlap_thresh.value_or(default_overlap_thresh(segs));
  segs = rank_segments(std::move(segs), thresh);
  out.micros_rank = micros_since(t0);
  t0 = Clock::now();
  for (const auto& s : segs) {
    try {
      out.raw += classify_segment(s, clf).text();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BlankSegment) throw;
      out.blank_segment = true;
    }
  }
  out.micros_classify = micros_since(t0);
  t0 = Clock::now();
  out.code = correct_sequence(out.raw, lex, opts.max_edit);
  if (out.blank_segment) out.code.resolved = false;
  out.micros_correct = micros_since(t0);
  return out;
}

}  // namespace sheetscan
