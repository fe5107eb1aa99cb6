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
#include <filesystem>
#include <functional>

#include "oracles.hpp"
#include "sheetscan/code_reader.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/synth_corpus.hpp"
#include "suites.hpp"

using namespace sheetscan;

namespace {

const std::filesystem::path kData{SHEETSCAN_DATA_DIR};

std::vector<Point> ink_of(const BinaryRaster& r, Point at = {0, 0}) {
  std::vector<Point> px;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (r.at(x, y)) px.push_back({at.x + x, at.y + y});
    }
  }
  return px;
}

TextPatch patch_of(const BinaryRaster& r) {
  TextPatch p;
  p.components = connected_components(r);
  p.bbox = {0, 0, r.width() - 1, r.height() - 1};
  return p;
}

const NearestCentroidClassifier& classifier() {
  static const NearestCentroidClassifier clf(Alphabet::load(kData / "glyphs"));
  return clf;
}

const Lexicon& lexicon() {
  static const Lexicon lex = load_lexicon(kData / "lexicon.txt", kData / "grammar.txt");
  return lex;
}

Segment box_segment(int x0, int y0, int w, int h) {
  std::vector<Point> px;
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) px.push_back({x, y});
  }
  return Segment::from_pixels(px);
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

TEST(SegmentPatch, SeparateGlyphsSeparateSegments) {
  const SyntheticFont& font = SyntheticFont::standard();
  BinaryRaster r(120, 60);
  r.paste(font.render('4'), {5, 5});
  r.paste(font.render('K'), {60, 5});
  EXPECT_EQ(segment_patch(patch_of(r)).size(), 2u);
  EXPECT_TRUE(segment_patch(patch_of(BinaryRaster(20, 20))).empty());
}

TEST(SegmentPatch, FusedPairIsOneSegment) {
  Rng rng(71);
  const CodePatch p = render_code_patch(SyntheticFont::standard(), "(B", rng, 0);
  EXPECT_EQ(segment_patch(patch_of(p.raster)).size(), 1u);
}

TEST(SegmentPatch, SegmentGeometry) {
  const Segment s = box_segment(3, 4, 5, 2);
  EXPECT_EQ(s.x_left, 3);
  EXPECT_EQ(s.x_right, 7);
  EXPECT_EQ(s.y_top, 4);
  EXPECT_EQ(s.y_bottom, 5);
  EXPECT_DOUBLE_EQ(s.x_cen, 5.0);
  EXPECT_DOUBLE_EQ(s.y_cen, 4.5);
  EXPECT_EQ(code_of([] { Segment::from_pixels({}); }), ErrorCode::BlankSegment);
}

TEST(Rank, TwoByTwoGrid) {
  // deliberately shuffled: bottom-right, top-left, bottom-left, top-right
  std::vector<Segment> segs{box_segment(50, 40, 10, 20), box_segment(0, 2, 10, 20), box_segment(0, 41, 10, 20),
                            box_segment(50, 0, 10, 20)};
  const auto r = rank_segments(segs, 10.0);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].x_left, 0);
  EXPECT_EQ(r[0].y_top, 2);
  EXPECT_EQ(r[1].x_left, 50);
  EXPECT_EQ(r[1].y_top, 0);
  EXPECT_EQ(r[2].x_left, 0);
  EXPECT_EQ(r[2].y_top, 41);
  EXPECT_EQ(r[3].x_left, 50);
}

TEST(Rank, DefaultThresholdIsHalfMedianHeight) {
  const std::vector<Segment> segs{box_segment(0, 0, 3, 20), box_segment(5, 0, 3, 30), box_segment(9, 0, 3, 10)};
  EXPECT_DOUBLE_EQ(default_overlap_thresh(segs), 10.0);
  EXPECT_DOUBLE_EQ(default_overlap_thresh({}), 0.0);
}

TEST(Rank, MatchesLineOracle) {
  const auto r = suites::ranking(72, 500);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Rank, OutputIsPermutation) {
  Rng rng(73);
  for (int i = 0; i < 200; ++i) {
    std::vector<Segment> segs;
    const int n = rng.uniform_int(0, 12);
    for (int k = 0; k < n; ++k) {
      segs.push_back(box_segment(rng.uniform_int(0, 300), rng.uniform_int(0, 200), rng.uniform_int(1, 20),
                                 rng.uniform_int(1, 30)));
    }
    auto key = [](const Segment& s) { return std::tuple(s.x_left, s.y_top, s.x_right, s.y_bottom); };
    std::vector<std::tuple<int, int, int, int>> before, after;
    for (const auto& s : segs) before.push_back(key(s));
    for (const auto& s : rank_segments(segs, rng.uniform(0.0, 20.0))) after.push_back(key(s));
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    ASSERT_EQ(before, after);
  }
}

TEST(Classifier, CleanGlyphsAllCorrect) {
  const SyntheticFont& font = SyntheticFont::standard();
  for (char c : font.symbols()) {
    const Segment s = Segment::from_pixels(ink_of(font.render(c)));
    EXPECT_EQ(classify_segment(s, classifier()).text(), std::string(1, c));
  }
  EXPECT_EQ(font.symbols().size(), kAlphabetSize);
}

TEST(Classifier, RotatedThree) {
  const SyntheticFont& font = SyntheticFont::standard();
  for (double deg : {-8.0, 8.0}) {
    EXPECT_EQ(classifier().classify_single(Segment::from_pixels(ink_of(font.render('3', deg)))), '3');
  }
}

TEST(Classifier, FusedPairSplitIntoTwoSymbols) {
  for (std::uint64_t seed = 74; seed < 84; ++seed) {
    Rng rng(seed);
    const CodePatch p = render_code_patch(SyntheticFont::standard(), "(B", rng, 0);
    const auto segs = segment_patch(patch_of(p.raster));
    ASSERT_EQ(segs.size(), 1u);
    const SegmentReading r = classify_segment(segs[0], classifier());
    EXPECT_TRUE(r.pair);
    EXPECT_EQ(r.text(), "(B") << "seed " << seed;
  }
}

TEST(Classifier, SingleGlyphIsNotSplit) {
  for (char c : std::string("0BMR")) {
    const Segment s = Segment::from_pixels(ink_of(SyntheticFont::standard().render(c)));
    EXPECT_FALSE(classifier().classify_pair(s).has_value()) << c;
  }
}

TEST(Classifier, BlankSegmentRejected) {
  Segment empty;
  EXPECT_EQ(code_of([&] { classify_segment(empty, classifier()); }), ErrorCode::BlankSegment);
}

TEST(Alphabet, RequiresThirtyOneSymbolsWithParensAndB) {
  const Alphabet full = SyntheticFont::standard().alphabet();
  std::vector<std::pair<char, BinaryRaster>> glyphs;
  for (const auto& g : full.glyphs()) glyphs.emplace_back(g.symbol, g.source);
  EXPECT_EQ(Alphabet(glyphs).size(), 31u);
  auto short_set = glyphs;
  short_set.pop_back();
  EXPECT_EQ(code_of([&] { Alphabet a(short_set); }), ErrorCode::InvalidArgument);
  auto dup = glyphs;
  dup.back().first = dup.front().first;
  EXPECT_EQ(code_of([&] { Alphabet a(dup); }), ErrorCode::InvalidArgument);
  auto no_b = glyphs;
  for (auto& g : no_b) {
    if (g.first == 'B') g.first = 'Z';
  }
  EXPECT_EQ(code_of([&] { Alphabet a(no_b); }), ErrorCode::InvalidArgument);
  EXPECT_TRUE(full.contains('('));
  EXPECT_FALSE(full.contains('Z'));
}

TEST(Alphabet, SaveLoadRoundTrip) {
  const Alphabet a = SyntheticFont::standard().alphabet();
  const auto dir = std::filesystem::temp_directory_path() / "sheetscan_alphabet";
  std::filesystem::remove_all(dir);
  a.save(dir);
  const Alphabet b = Alphabet::load(dir);
  EXPECT_EQ(b.symbols(), a.symbols());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b.glyphs()[i].reference, a.glyphs()[i].reference);
  std::filesystem::remove_all(dir);
  EXPECT_EQ(code_of([&] { Alphabet::load(dir); }), ErrorCode::IoError);
}

TEST(Correct, RuleFixesLeadingOne) {
  const DamageCode d = correct_sequence("1B)", lexicon());
  EXPECT_EQ(d.text, "(B)");
  EXPECT_TRUE(d.resolved);
  EXPECT_GE(d.corrections_applied, 1);
  EXPECT_EQ(apply_rules("1B)", lexicon().rules).first, "(B)");
  EXPECT_EQ(apply_rules("(B1", lexicon().rules).first, "(B)");
}

TEST(Correct, LexiconCodesUnchanged) {
  for (const auto& code : lexicon().codes) {
    const DamageCode d = correct_sequence(code, lexicon());
    ASSERT_EQ(d.text, code);
    ASSERT_TRUE(d.resolved);
    ASSERT_EQ(d.corrections_applied, 0);
    ASSERT_DOUBLE_EQ(d.confidence, 1.0);
  }
}

TEST(Correct, TieGoesToSmallestCode) {
  const Lexicon lex{{"4KA", "4KB", "4KC"}, {}};
  const DamageCode d = correct_sequence("4KX", lex);
  EXPECT_EQ(d.text, "4KA");
  EXPECT_EQ(d.corrections_applied, 1);
}

TEST(Correct, FarOrEmptyUnresolved) {
  EXPECT_FALSE(correct_sequence("", lexicon()).resolved);
  const DamageCode far = correct_sequence("QQQQQQQ", lexicon());
  EXPECT_FALSE(far.resolved);
}

TEST(Correct, OutputInLexiconOrUnresolved) {
  Rng rng(85);
  const std::string symbols = SyntheticFont::standard().symbols();
  for (int i = 0; i < 300; ++i) {
    std::string raw;
    const int n = rng.uniform_int(1, 6);
    for (int k = 0; k < n; ++k) raw.push_back(symbols[std::size_t(rng.uniform_int(0, 30))]);
    const DamageCode d = correct_sequence(raw, lexicon());
    if (d.resolved) {
      ASSERT_TRUE(lexicon().contains(d.text)) << raw;
      ASSERT_LE(levenshtein(apply_rules(raw, lexicon().rules).first, d.text), 2);
    }
  }
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein("", ""), 0);
  EXPECT_EQ(levenshtein("abc", ""), 3);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3);
  EXPECT_EQ(levenshtein("(B)", "1B)"), 1);
}

TEST(Levenshtein, MatchesMatrixOracle) {
  const auto r = suites::levenshtein(86, 500);
  EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(ReadPatch, CleanCode) {
  for (const char* code : {"2C1", "(B)", "4K7", "(D)"}) {
    Rng rng(87);
    const CodePatch p = render_code_patch(SyntheticFont::standard(), code, rng);
    const PatchReading r = read_patch(patch_of(p.raster), classifier(), lexicon());
    EXPECT_EQ(r.raw, code);
    EXPECT_EQ(r.code.text, code);
    EXPECT_TRUE(r.code.resolved);
  }
}

TEST(ReadPatch, TwoLinesReadTopFirst) {
  Rng rng(88);
  const CodePatch top = render_code_patch(SyntheticFont::standard(), "2C", rng);
  const CodePatch bottom = render_code_patch(SyntheticFont::standard(), "1", rng);
  BinaryRaster r(std::max(top.raster.width(), bottom.raster.width()) + 10, top.raster.height() * 3);
  r.paste(top.raster, {0, 0});
  r.paste(bottom.raster, {0, top.raster.height() * 2});
  const PatchReading pr = read_patch(patch_of(r), classifier(), lexicon());
  EXPECT_EQ(pr.raw, "2C1");
}

TEST(ReadPatch, EmptyPatchUnresolved) {
  const PatchReading r = read_patch(TextPatch{}, classifier(), lexicon());
  EXPECT_TRUE(r.empty_patch);
  EXPECT_FALSE(r.code.resolved);
  EXPECT_EQ(r.segments, 0);
}
