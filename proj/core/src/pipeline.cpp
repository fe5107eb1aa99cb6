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
#include "sheetscan/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sheetscan/error.hpp"
#include "sheetscan/kv_file.hpp"

namespace sheetscan {

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::filesystem::path existing(const KeyValue& kv, const std::filesystem::path& base, bool directory) {
  std::filesystem::path p(kv.value);
  if (p.is_relative()) p = base / p;
  p = p.lexically_normal();
  const bool ok = directory ? std::filesystem::is_directory(p) : std::filesystem::is_regular_file(p);
  if (!ok) {
    throw Error(ErrorCode::IoError, "line " + std::to_string(kv.line) + ": " + kv.key + " = " + kv.value +
                                        (directory ? " is not a directory" : " is not a file"));
  }
  return p;
}

int as_int(const KeyValue& kv) { return int(parse_int(kv)); }

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& source) {
  PipelineConfig c;
  bool have[4] = {false, false, false, false};
  for (const auto& kv : parse_kv(text, source)) {
    const std::string& k = kv.key;
    if (k == "templates") c.templates_dir = existing(kv, base_dir, true), have[0] = true;
    else if (k == "glyphs") c.glyphs_dir = existing(kv, base_dir, true), have[1] = true;
    else if (k == "lexicon") c.lexicon_path = existing(kv, base_dir, false), have[2] = true;
    else if (k == "grammar") c.grammar_path = existing(kv, base_dir, false), have[3] = true;
    else if (k == "presence_fraction") c.presence_fraction = parse_double(kv);
    else if (k == "ncc_threshold") c.ncc_threshold = parse_double(kv);
    else if (k == "cloud_segmenter") c.cloud_segmenter = kv.value;
    else if (k == "min_cloud_area") c.cloud.min_cloud_area = parse_int(kv);
    else if (k == "min_enclosed") c.cloud.min_enclosed = as_int(kv);
    else if (k == "cloud_ring_reach") c.cloud.ring_reach = as_int(kv);
    else if (k == "cloud_min_hole_area") c.cloud.min_hole_area = parse_int(kv);
    else if (k == "median_window") c.median_window = as_int(kv);
    else if (k == "arrow_classifier") c.arrow_classifier = kv.value;
    else if (k == "arrow_head_ratio") c.arrow.head_ratio = parse_double(kv);
    else if (k == "arrow_min_elongation") c.arrow.min_elongation = parse_double(kv);
    else if (k == "arrow_min_length") c.arrow.min_length = parse_double(kv);
    else if (k == "hough_rho") c.hough.rho_resolution = parse_double(kv);
    else if (k == "hough_theta") c.hough.theta_resolution = parse_double(kv);
    else if (k == "hough_threshold") c.hough.accumulator_threshold = as_int(kv);
    else if (k == "hough_min_length") c.hough.min_line_length = parse_double(kv);
    else if (k == "hough_max_gap") c.hough.max_gap = parse_double(kv);
    else if (k == "merge_slope_tol") c.merge.slope_tol = parse_double(kv);
    else if (k == "merge_gap_max") c.merge.gap_max = parse_double(kv);
    else if (k == "merge_collinearity_tol") c.merge.collinearity_tol = parse_double(kv);
    else if (k == "text_detector") c.text_detector = kv.value;
    else if (k == "window_width") c.window.width = as_int(kv);
    else if (k == "window_height") c.window.height = as_int(kv);
    else if (k == "window_overlap") c.window.overlap_fraction = parse_double(kv);
    else if (k == "text_dilation_gap") c.text.dilation_gap = as_int(kv);
    else if (k == "text_min_chars") c.text.min_chars = as_int(kv);
    else if (k == "text_max_extent") c.text.max_component_extent = as_int(kv);
    else if (k == "text_min_pixels") c.text.min_component_pixels = as_int(kv);
    else if (k == "line_text_margin") c.line_text_margin = as_int(kv);
    else if (k == "assoc_max_distance") c.assoc.max_distance = parse_double(kv);
    else if (k == "kmeans_max_iters") c.assoc.kmeans_max_iters = as_int(kv);
    else if (k == "segment_classifier") c.segment_classifier = kv.value;
    else if (k == "pair_aspect") c.glyph.pair_aspect = parse_double(kv);
    else if (k == "max_rotation") c.glyph.max_rotation = parse_double(kv);
    else if (k == "rotation_step") c.glyph.rotation_step = parse_double(kv);
    else if (k == "overlap_thresh") {
      if (kv.value == "median") c.overlap_thresh.reset();
      else c.overlap_thresh = parse_double(kv);
    } else if (k == "max_edit") c.max_edit = as_int(kv);
    else if (k == "workers") c.workers = as_int(kv);
    else throw Error(ErrorCode::ParseError, source + ":" + std::to_string(kv.line) + ": unknown key '" + k + "'");
  }
  const char* names[4] = {"templates", "glyphs", "lexicon", "grammar"};
  for (int i = 0; i < 4; ++i) {
    if (!have[i]) throw Error(ErrorCode::ParseError, source + ": missing required key '" + names[i] + "'");
  }
  if (!(c.presence_fraction > 0.0 && c.presence_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "presence_fraction must lie in (0, 1]");
  }
  if (c.median_window < 3 || c.median_window % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median_window must be odd and >= 3");
  }
  if (c.cloud.ring_reach < 1 || c.cloud.min_hole_area < 1) {
    throw Error(ErrorCode::InvalidArgument, "cloud_ring_reach and cloud_min_hole_area must be >= 1");
  }
  if (c.max_edit < 0) throw Error(ErrorCode::InvalidArgument, "max_edit must be >= 0");
  if (c.workers < 1) throw Error(ErrorCode::InvalidArgument, "workers must be >= 1");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), path.string());
}

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string format_config(const PipelineConfig& c) {
  std::ostringstream o;
  o << "templates = " << c.templates_dir.string() << "\n"
    << "glyphs = " << c.glyphs_dir.string() << "\n"
    << "lexicon = " << c.lexicon_path.string() << "\n"
    << "grammar = " << c.grammar_path.string() << "\n"
    << "presence_fraction = " << num(c.presence_fraction) << "\n"
    << "ncc_threshold = " << num(c.ncc_threshold) << "\n"
    << "cloud_segmenter = " << c.cloud_segmenter << "\n"
    << "min_cloud_area = " << c.cloud.min_cloud_area << "\n"
    << "min_enclosed = " << c.cloud.min_enclosed << "\n"
    << "cloud_ring_reach = " << c.cloud.ring_reach << "\n"
    << "cloud_min_hole_area = " << c.cloud.min_hole_area << "\n"
    << "median_window = " << c.median_window << "\n"
    << "arrow_classifier = " << c.arrow_classifier << "\n"
    << "arrow_head_ratio = " << num(c.arrow.head_ratio) << "\n"
    << "arrow_min_elongation = " << num(c.arrow.min_elongation) << "\n"
    << "arrow_min_length = " << num(c.arrow.min_length) << "\n"
    << "hough_rho = " << num(c.hough.rho_resolution) << "\n"
    << "hough_theta = " << num(c.hough.theta_resolution) << "\n"
    << "hough_threshold = " << c.hough.accumulator_threshold << "\n"
    << "hough_min_length = " << num(c.hough.min_line_length) << "\n"
    << "hough_max_gap = " << num(c.hough.max_gap) << "\n"
    << "merge_slope_tol = " << num(c.merge.slope_tol) << "\n"
    << "merge_gap_max = " << num(c.merge.gap_max) << "\n"
    << "merge_collinearity_tol = " << num(c.merge.collinearity_tol) << "\n"
    << "text_detector = " << c.text_detector << "\n"
    << "window_width = " << c.window.width << "\n"
    << "window_height = " << c.window.height << "\n"
    << "window_overlap = " << num(c.window.overlap_fraction) << "\n"
    << "text_dilation_gap = " << c.text.dilation_gap << "\n"
    << "text_min_chars = " << c.text.min_chars << "\n"
    << "text_max_extent = " << c.text.max_component_extent << "\n"
    << "text_min_pixels = " << c.text.min_component_pixels << "\n"
    << "line_text_margin = " << c.line_text_margin << "\n"
    << "assoc_max_distance = " << num(c.assoc.max_distance) << "\n"
    << "kmeans_max_iters = " << c.assoc.kmeans_max_iters << "\n"
    << "segment_classifier = " << c.segment_classifier << "\n"
    << "pair_aspect = " << num(c.glyph.pair_aspect) << "\n"
    << "max_rotation = " << num(c.glyph.max_rotation) << "\n"
    << "rotation_step = " << num(c.glyph.rotation_step) << "\n"
    << "overlap_thresh = " << (c.overlap_thresh ? num(*c.overlap_thresh) : std::string("median")) << "\n"
    << "max_edit = " << c.max_edit << "\n"
    << "workers = " << c.workers << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Diagnostics and reports

bool StageDiagnostics::conserved() const {
  return templates_total == templates_matched + int(templates_missing.size()) &&
         connectors == arrow_components + plain_connectors && merged_lines == plain_connectors + lines_in_text &&
         connectors == associated + unassociated && associated == patches + split_dropped &&
         patches == zone_hits + zone_misses && records == patches;
}

namespace {

using ojson = nlohmann::ordered_json;

ojson box_json(const BBox& b) { return ojson::array({b.x0, b.y0, b.x1, b.y1}); }
BBox box_from(const ojson& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()}; }
ojson point_json(PointF p) { return ojson::array({p.x, p.y}); }
PointF point_from(const ojson& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

ojson connector_json(const Connector& c) {
  return {{"head", point_json(c.head)},
          {"tail", point_json(c.tail)},
          {"kind", c.kind == ConnectorKind::ArrowHeaded ? "arrow" : "line"},
          {"source", c.source},
          {"oriented", c.oriented},
          {"low_confidence", c.low_confidence}};
}

Connector connector_from(const ojson& j) {
  Connector c;
  c.head = point_from(j.at("head"));
  c.tail = point_from(j.at("tail"));
  c.kind = j.at("kind").get<std::string>() == "arrow" ? ConnectorKind::ArrowHeaded : ConnectorKind::PlainLine;
  c.source = j.at("source").get<std::string>();
  c.oriented = j.at("oriented").get<bool>();
  c.low_confidence = j.at("low_confidence").get<bool>();
  return c;
}

}  // namespace

std::string report_to_json(const SheetReport& r) {
  ojson j;
  j["sheet_id"] = r.sheet_id;
  j["records"] = ojson::array();
  for (const auto& rec : r.records) {
    j["records"].push_back({{"template_id", rec.template_id},
                            {"zone_id", rec.zone_id},
                            {"code",
                             {{"text", rec.code.text},
                              {"confidence", rec.code.confidence},
                              {"corrections_applied", rec.code.corrections_applied},
                              {"resolved", rec.code.resolved}}},
                            {"raw", rec.raw},
                            {"connector", connector_json(rec.connector)},
                            {"patch_bbox", box_json(rec.patch_bbox)},
                            {"no_zone_hit", rec.no_zone_hit},
                            {"zone_low_confidence", rec.zone_low_confidence},
                            {"zone_distance", rec.zone_distance}});
  }
  const StageDiagnostics& d = r.diagnostics;
  j["diagnostics"] = {{"templates_total", d.templates_total},
                      {"templates_matched", d.templates_matched},
                      {"templates_missing", d.templates_missing},
                      {"cloud_pixels", d.cloud_pixels},
                      {"components", d.components},
                      {"arrow_components", d.arrow_components},
                      {"hough_lines", d.hough_lines},
                      {"merged_lines", d.merged_lines},
                      {"lines_in_text", d.lines_in_text},
                      {"plain_connectors", d.plain_connectors},
                      {"connectors", d.connectors},
                      {"text_boxes", d.text_boxes},
                      {"associated", d.associated},
                      {"unassociated", d.unassociated},
                      {"split_boxes", d.split_boxes},
                      {"split_dropped", d.split_dropped},
                      {"patches", d.patches},
                      {"empty_patches", d.empty_patches},
                      {"unresolved_codes", d.unresolved_codes},
                      {"zone_hits", d.zone_hits},
                      {"zone_misses", d.zone_misses},
                      {"records", d.records}};
  j["connectors"] = ojson::array();
  for (const auto& c : r.connectors) j["connectors"].push_back(connector_json(c));
  j["text_boxes"] = ojson::array();
  for (const auto& b : r.text_boxes) j["text_boxes"].push_back(box_json(b));
  return j.dump(2) + "\n";
}

SheetReport report_from_json(const std::string& text) {
  SheetReport r;
  try {
    const ojson j = ojson::parse(text);
    r.sheet_id = j.at("sheet_id").get<std::string>();
    for (const auto& rj : j.at("records")) {
      ReportRecord rec;
      rec.template_id = rj.at("template_id").get<std::string>();
      rec.zone_id = rj.at("zone_id").get<std::string>();
      const auto& cj = rj.at("code");
      rec.code.text = cj.at("text").get<std::string>();
      rec.code.confidence = cj.at("confidence").get<double>();
      rec.code.corrections_applied = cj.at("corrections_applied").get<int>();
      rec.code.resolved = cj.at("resolved").get<bool>();
      rec.raw = rj.at("raw").get<std::string>();
      rec.connector = connector_from(rj.at("connector"));
      rec.patch_bbox = box_from(rj.at("patch_bbox"));
      rec.no_zone_hit = rj.at("no_zone_hit").get<bool>();
      rec.zone_low_confidence = rj.at("zone_low_confidence").get<bool>();
      rec.zone_distance = rj.at("zone_distance").get<double>();
      r.records.push_back(std::move(rec));
    }
    const auto& dj = j.at("diagnostics");
    StageDiagnostics& d = r.diagnostics;
    d.templates_total = dj.at("templates_total").get<int>();
    d.templates_matched = dj.at("templates_matched").get<int>();
    d.templates_missing = dj.at("templates_missing").get<std::vector<std::string>>();
    d.cloud_pixels = dj.at("cloud_pixels").get<std::int64_t>();
    d.components = dj.at("components").get<int>();
    d.arrow_components = dj.at("arrow_components").get<int>();
    d.hough_lines = dj.at("hough_lines").get<int>();
    d.merged_lines = dj.at("merged_lines").get<int>();
    d.lines_in_text = dj.at("lines_in_text").get<int>();
    d.plain_connectors = dj.at("plain_connectors").get<int>();
    d.connectors = dj.at("connectors").get<int>();
    d.text_boxes = dj.at("text_boxes").get<int>();
    d.associated = dj.at("associated").get<int>();
    d.unassociated = dj.at("unassociated").get<int>();
    d.split_boxes = dj.at("split_boxes").get<int>();
    d.split_dropped = dj.at("split_dropped").get<int>();
    d.patches = dj.at("patches").get<int>();
    d.empty_patches = dj.at("empty_patches").get<int>();
    d.unresolved_codes = dj.at("unresolved_codes").get<int>();
    d.zone_hits = dj.at("zone_hits").get<int>();
    d.zone_misses = dj.at("zone_misses").get<int>();
    d.records = dj.at("records").get<int>();
    for (const auto& c : j.at("connectors")) r.connectors.push_back(connector_from(c));
    for (const auto& b : j.at("text_boxes")) r.text_boxes.push_back(box_from(b));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
  return r;
}

void save_report(const SheetReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << report_to_json(r);
}

SheetReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Pipeline

std::vector<ZoneMap> load_zone_maps(const TemplateSet& set, const std::filesystem::path& dir) {
  std::vector<ZoneMap> maps;
  for (const auto& t : set.templates) maps.push_back(load_zone_map(dir / (t.id + ".zones"), t.id));
  return maps;
}

Pipeline::Pipeline(const PipelineConfig& cfg) : cfg_(cfg) {
  templates_ = load_template_set(cfg_.templates_dir);
  zone_maps_ = load_zone_maps(templates_, cfg_.templates_dir);
  lexicon_ = load_lexicon(cfg_.lexicon_path, cfg_.grammar_path);
  Alphabet alphabet = Alphabet::load(cfg_.glyphs_dir);
  build_stages();
  glyphs_ = std::make_unique<NearestCentroidClassifier>(std::move(alphabet), cfg_.glyph);
}

Pipeline::Pipeline(const PipelineConfig& cfg, TemplateSet templates, std::vector<ZoneMap> zone_maps,
                   Alphabet alphabet, Lexicon lexicon)
    : cfg_(cfg), templates_(std::move(templates)), zone_maps_(std::move(zone_maps)), lexicon_(std::move(lexicon)) {
  if (zone_maps_.size() != templates_.templates.size()) {
    throw Error(ErrorCode::InvalidArgument, "one zone map per template is required");
  }
  for (std::size_t i = 0; i < zone_maps_.size(); ++i) {
    if (zone_maps_[i].template_id != templates_.templates[i].id) {
      throw Error(ErrorCode::IdMismatch, "zone map " + zone_maps_[i].template_id + " does not follow template order");
    }
  }
  build_stages();
  glyphs_ = std::make_unique<NearestCentroidClassifier>(std::move(alphabet), cfg_.glyph);
}

Pipeline::~Pipeline() = default;

void Pipeline::build_stages() {
  if (cfg_.cloud_segmenter != "geometric") {
    throw Error(ErrorCode::InvalidArgument, "unknown cloud_segmenter '" + cfg_.cloud_segmenter + "'");
  }
  if (cfg_.arrow_classifier != "geometric") {
    throw Error(ErrorCode::InvalidArgument, "unknown arrow_classifier '" + cfg_.arrow_classifier + "'");
  }
  if (cfg_.text_detector != "proximity") {
    throw Error(ErrorCode::InvalidArgument, "unknown text_detector '" + cfg_.text_detector + "'");
  }
  if (cfg_.segment_classifier != "nearest_centroid") {
    throw Error(ErrorCode::InvalidArgument, "unknown segment_classifier '" + cfg_.segment_classifier + "'");
  }
  cloud_ = std::make_unique<GeometricCloudSegmenter>(cfg_.cloud);
  arrow_ = std::make_unique<GeometricArrowClassifier>(cfg_.arrow);
  text_ = std::make_unique<ProximityTextDetector>(cfg_.text);
}

namespace {

struct Placement {
  std::size_t index;
  Point origin;
  double diagonal;
};

bool inside(PointF p, const BBox& b) { return p.x >= b.x0 && p.x <= b.x1 && p.y >= b.y0 && p.y <= b.y1; }

BBox hull(const std::vector<ConnectedComponent>& comps, const BBox& fallback) {
  if (comps.empty()) return fallback;
  BBox b = comps.front().bbox;
  for (const auto& c : comps) b = b.united(c.bbox);
  return b;
}

}  // namespace

SheetReport Pipeline::digitize(const BinaryRaster& sheet, const std::string& sheet_id, const Log& log) const {
  auto say = [&log](const std::string& msg) {
    if (log) log(msg);
  };
  SheetReport report;
  report.sheet_id = sheet_id;
  StageDiagnostics& d = report.diagnostics;

  // 1. templates
  BinaryRaster work = sheet;
  std::vector<Placement> placed;
  d.templates_total = int(templates_.templates.size());
  if (!templates_.templates.empty()) {
    const NccLocator locator(sheet);
    for (std::size_t i = 0; i < templates_.templates.size(); ++i) {
      const Template& t = templates_.templates[i];
      if (t.raster.width() > sheet.width() || t.raster.height() > sheet.height()) {
        d.templates_missing.push_back(t.id);
        continue;
      }
      NccMatch m;
      try {
        m = locator.locate(t);
      } catch (const Error& e) {
        // blank sheet or blank region: nothing to match against
        if (e.code() != ErrorCode::DegenerateInput) throw;
        m.score = 0.0;
      }
      if (m.score < cfg_.ncc_threshold) {
        d.templates_missing.push_back(t.id);
        say(t.id + ": no match (score " + std::to_string(m.score) + ")");
        continue;
      }
      work = subtract_template(work, t, m.location);
      placed.push_back({i, m.location, std::hypot(double(t.raster.width()), double(t.raster.height()))});
      say(t.id + ": matched at (" + std::to_string(m.location.x) + ", " + std::to_string(m.location.y) +
          ") score " + std::to_string(m.score));
    }
  }
  d.templates_matched = int(placed.size());

  // 2. clouds
  const CloudMask mask = segment_clouds(work, *cloud_);
  d.cloud_pixels = mask.count(CloudLabel::Boundary) + mask.count(CloudLabel::Cloud);
  work = remove_clouds(work, mask, cfg_.median_window);
  say("clouds: " + std::to_string(d.cloud_pixels) + " px erased");

  // 3. arrows
  const auto comps = connected_components(work);
  d.components = int(comps.size());
  std::vector<Connector> connectors;
  BinaryRaster line_raster = work;
  for (const auto& c : comps) {
    if (std::hypot(double(c.bbox.width()), double(c.bbox.height())) < cfg_.arrow.min_length) continue;
    if (classify_component(c, *arrow_).label != ArrowLabel::Arrow) continue;
    const auto [a, b] = principal_axis_endpoints(c.pixels);
    Connector con;
    con.head = a;
    con.tail = b;
    con.kind = ConnectorKind::ArrowHeaded;
    con.source = "c" + std::to_string(c.id);
    connectors.push_back(con);
    for (const Point& p : c.pixels) line_raster.set(p.x, p.y, false);
  }
  d.arrow_components = int(connectors.size());

  // 4. text boxes
  const auto boxes = detect_text(work, cfg_.window, *text_);
  d.text_boxes = int(boxes.size());
  for (const auto& b : boxes) report.text_boxes.push_back(b.bbox);

  // 5. plain lines
  const auto raw_lines = detect_lines(line_raster, cfg_.hough);
  d.hough_lines = int(raw_lines.size());
  const auto lines = merge_lines(raw_lines, cfg_.merge);
  d.merged_lines = int(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const LineSegment& s = lines[i];
    const bool in_text = std::any_of(boxes.begin(), boxes.end(), [&](const TextBox& b) {
      const BBox g = b.bbox.expanded(cfg_.line_text_margin);
      return inside(s.p1, g) && inside(s.p2, g);
    });
    if (in_text) {
      ++d.lines_in_text;
      continue;
    }
    Connector con;
    con.head = s.p1;
    con.tail = s.p2;
    con.kind = ConnectorKind::PlainLine;
    con.source = "l" + std::to_string(i);
    connectors.push_back(con);
  }
  d.plain_connectors = int(connectors.size()) - d.arrow_components;
  d.connectors = int(connectors.size());
  report.connectors = connectors;
  say("connectors: " + std::to_string(d.arrow_components) + " arrows, " + std::to_string(d.plain_connectors) +
      " lines (" + std::to_string(d.lines_in_text) + " dropped inside text)");

  // 6. association and splitting
  const AssocResult assoc = associate_and_filter(connectors, boxes, cfg_.assoc);
  d.associated = int(assoc.candidates.size());
  d.unassociated = int(assoc.dropped.size());
  std::map<int, std::vector<const AssocCandidate*>> by_box;
  for (const auto& c : assoc.candidates) by_box[c.box].push_back(&c);

  struct Work {
    Connector connector;
    TextPatch patch;
  };
  std::vector<Work> patches;
  for (const auto& [box_index, cands] : by_box) {
    const TextBox& box = boxes[std::size_t(box_index)];
    auto members = components_in_box(comps, box.bbox, cfg_.text.min_component_pixels, cfg_.text.max_component_extent);
    if (cands.size() == 1) {
      patches.push_back({cands[0]->connector, TextPatch{hull(members, box.bbox), std::move(members), box_index}});
      continue;
    }
    ++d.split_boxes;
    std::vector<Connector> cons;
    for (const auto* c : cands) cons.push_back(c->connector);
    try {
      auto split = split_box(box, cons, members, cfg_.assoc.kmeans_max_iters, box_index);
      for (std::size_t i = 0; i < split.size(); ++i) {
        split[i].bbox = hull(split[i].components, split[i].bbox);
        patches.push_back({cons[i], std::move(split[i])});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SplitInfeasible) throw;
      // keep the connector whose tail is closest; the others lose the box
      const auto best = std::min_element(cands.begin(), cands.end(), [](const auto* a, const auto* b) {
        return a->tail_distance < b->tail_distance;
      });
      patches.push_back({(*best)->connector, TextPatch{hull(members, box.bbox), std::move(members), box_index}});
      d.split_dropped += int(cands.size()) - 1;
      say("box " + std::to_string(box_index) + ": split infeasible, kept one of " + std::to_string(cands.size()));
    }
  }
  d.patches = int(patches.size());

  // 7. orientation, reading, zones
  ReadOptions ropts;
  ropts.overlap_thresh = cfg_.overlap_thresh;
  ropts.max_edit = cfg_.max_edit;
  for (auto& w : patches) {
    ReportRecord rec;
    rec.connector = orient_connector(w.connector, w.patch.bbox);
    rec.patch_bbox = w.patch.bbox;
    const PatchReading reading = read_patch(w.patch, *glyphs_, lexicon_, ropts);
    rec.code = reading.code;
    rec.raw = reading.raw;
    if (reading.empty_patch) ++d.empty_patches;
    if (!rec.code.resolved) ++d.unresolved_codes;
    const PointF dir = rec.connector.head - rec.connector.tail;
    std::optional<ZoneHit> best;
    std::size_t best_t = 0;
    if (dir.norm() > 0.0) {
      for (const auto& p : placed) {
        const auto hit = try_locate_zone(rec.connector.head, dir, zone_maps_[p.index], p.origin, p.diagonal);
        if (hit && (!best || hit->distance < best->distance)) {
          best = hit;
          best_t = p.index;
        }
      }
    }
    if (best) {
      ++d.zone_hits;
      rec.template_id = templates_.templates[best_t].id;
      rec.zone_id = best->zone_id;
      rec.zone_distance = best->distance;
      rec.zone_low_confidence = best->low_confidence;
    } else {
      ++d.zone_misses;
      rec.no_zone_hit = true;
    }
    report.records.push_back(std::move(rec));
  }
  std::sort(report.records.begin(), report.records.end(), [](const ReportRecord& a, const ReportRecord& b) {
    if (a.template_id != b.template_id) return a.template_id < b.template_id;
    if (a.zone_id != b.zone_id) return a.zone_id < b.zone_id;
    if (a.patch_bbox.y0 != b.patch_bbox.y0) return a.patch_bbox.y0 < b.patch_bbox.y0;
    if (a.patch_bbox.x0 != b.patch_bbox.x0) return a.patch_bbox.x0 < b.patch_bbox.x0;
    return yx_less(a.connector.head, b.connector.head);
  });
  d.records = int(report.records.size());
  say("records: " + std::to_string(d.records) + " (" + std::to_string(d.zone_misses) + " without zone, " +
      std::to_string(d.unresolved_codes) + " unresolved)");
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

std::string Rate::percent() const {
  if (total <= 0) return "n/a";
  // truncation, computed exactly on the integers
  const std::int64_t tenths = correct * 1000 / total;
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

Rate product(const Rate& a, const Rate& b) { return {a.correct * b.correct, a.total * b.total}; }

namespace {

bool endpoints_match(const Connector& c, PointF head, PointF tail, double tol, bool oriented) {
  const bool direct = distance(c.head, head) <= tol && distance(c.tail, tail) <= tol;
  if (oriented) return direct;
  return direct || (distance(c.head, tail) <= tol && distance(c.tail, head) <= tol);
}

/// Greedy one-to-one assignment on descending score; score < 0 means no edge.
std::vector<int> assign(std::size_t n_truth, std::size_t n_pred, const std::function<double(std::size_t, std::size_t)>& score) {
  struct Edge {
    double s;
    std::size_t t;
    std::size_t p;
  };
  std::vector<Edge> edges;
  for (std::size_t t = 0; t < n_truth; ++t) {
    for (std::size_t p = 0; p < n_pred; ++p) {
      const double s = score(t, p);
      if (s >= 0.0) edges.push_back({s, t, p});
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.s > b.s; });
  std::vector<int> match(n_truth, -1);
  std::vector<bool> used(n_pred, false);
  for (const auto& e : edges) {
    if (match[e.t] >= 0 || used[e.p]) continue;
    match[e.t] = int(e.p);
    used[e.p] = true;
  }
  return match;
}

}  // namespace

Metrics evaluate(const std::vector<SheetReport>& reports, const std::vector<GroundTruth>& truths,
                 const EvalParams& params) {
  std::map<std::string, const SheetReport*> by_id;
  for (const auto& r : reports) {
    if (!by_id.emplace(r.sheet_id, &r).second) throw Error(ErrorCode::IdMismatch, "duplicate report " + r.sheet_id);
  }
  std::set<std::string> truth_ids;
  for (const auto& t : truths) {
    if (!truth_ids.insert(t.sheet_id).second) throw Error(ErrorCode::IdMismatch, "duplicate truth " + t.sheet_id);
    if (!by_id.count(t.sheet_id)) throw Error(ErrorCode::IdMismatch, "no report for sheet " + t.sheet_id);
  }
  for (const auto& [id, r] : by_id) {
    if (!truth_ids.count(id)) throw Error(ErrorCode::IdMismatch, "no ground truth for sheet " + id);
  }

  const double tol = params.endpoint_tolerance;
  Metrics m;
  for (const auto& gt : truths) {
    const SheetReport& rep = *by_id.at(gt.sheet_id);
    const auto& ann = gt.annotations;
    const std::size_t n = ann.size();

    const auto conn = assign(n, rep.connectors.size(), [&](std::size_t t, std::size_t p) {
      const Connector& c = rep.connectors[p];
      if (!endpoints_match(c, ann[t].head, ann[t].tail, tol, false)) return -1.0;
      const double direct = std::max(distance(c.head, ann[t].head), distance(c.tail, ann[t].tail));
      const double swapped = std::max(distance(c.head, ann[t].tail), distance(c.tail, ann[t].head));
      return -std::min(direct, swapped) + 1e6;
    });
    const auto text = assign(n, rep.text_boxes.size(), [&](std::size_t t, std::size_t p) {
      const double v = iou(ann[t].patch_bbox, rep.text_boxes[p]);
      return v >= params.iou_threshold ? v : -1.0;
    });
    const auto rec = assign(n, rep.records.size(), [&](std::size_t t, std::size_t p) {
      const double v = iou(ann[t].patch_bbox, rep.records[p].patch_bbox);
      return v >= params.iou_threshold ? v : -1.0;
    });

    std::vector<bool> rec_used(rep.records.size(), false);
    for (std::size_t t = 0; t < n; ++t) {
      const AnnotationTruth& a = ann[t];
      m.connector_detection.total += 1;
      m.text_detection.total += 1;
      m.text_association_cumulative.total += 1;
      m.record_exact_match.total += 1;
      if (conn[t] >= 0) m.connector_detection.correct += 1;
      const ReportRecord* r = rec[t] >= 0 ? &rep.records[std::size_t(rec[t])] : nullptr;
      if (r) rec_used[std::size_t(rec[t])] = true;
      const bool linked = r && endpoints_match(r->connector, a.head, a.tail, tol, true);
      const bool zone_ok = r && r->template_id == a.template_id && r->zone_id == a.zone_id;
      if (text[t] >= 0) {
        m.text_detection.correct += 1;
        m.patch_association.total += 1;
        if (linked) m.patch_association.correct += 1;
      }
      if (linked) {
        m.zone_mapping.total += 1;
        if (zone_ok) m.zone_mapping.correct += 1;
        if (zone_ok) m.text_association_cumulative.correct += 1;
      }
      if (r) {
        m.reading_exact_match.total += 1;
        if (r->code.text == a.code) m.reading_exact_match.correct += 1;
        if (zone_ok && r->code.text == a.code) m.record_exact_match.correct += 1;
      }
    }
    for (bool u : rec_used) m.spurious_records += u ? 0 : 1;

    // boxes holding several codes
    for (const BBox& box : rep.text_boxes) {
      std::vector<std::size_t> inside_box;
      for (std::size_t t = 0; t < n; ++t) {
        const PointF c = ann[t].patch_bbox.center();
        if (c.x >= box.x0 && c.x <= box.x1 && c.y >= box.y0 && c.y <= box.y1) inside_box.push_back(t);
      }
      if (inside_box.size() < 2) continue;
      m.clustering.total += 1;
      if (std::all_of(inside_box.begin(), inside_box.end(), [&](std::size_t t) { return rec[t] >= 0; })) {
        m.clustering.correct += 1;
      }
    }
  }
  m.end_to_end = product(m.text_association_cumulative, m.reading_exact_match);
  return m;
}

Metrics metrics_from_counts(const std::string& json_text) {
  Metrics m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "fixture counts must be a JSON object");
    const std::map<std::string, Rate*> fields{{"connector_detection", &m.connector_detection},
                                              {"text_detection", &m.text_detection},
                                              {"patch_association", &m.patch_association},
                                              {"clustering", &m.clustering},
                                              {"zone_mapping", &m.zone_mapping},
                                              {"reading_exact_match", &m.reading_exact_match},
                                              {"text_association_cumulative", &m.text_association_cumulative},
                                              {"record_exact_match", &m.record_exact_match}};
    for (const auto& [key, value] : j.items()) {
      const auto it = fields.find(key);
      if (it == fields.end()) throw Error(ErrorCode::ParseError, "unknown metric '" + key + "' in fixture counts");
      const std::string want = "metric '" + key + "' needs [correct, total] with 0 <= correct <= total";
      if (!value.is_array() || value.size() != 2) throw Error(ErrorCode::ParseError, want);
      const auto c = value.at(0).get<std::int64_t>();
      const auto t = value.at(1).get<std::int64_t>();
      if (c < 0 || t < 0 || c > t) throw Error(ErrorCode::ParseError, want);
      *it->second = Rate{c, t};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("fixture counts: ") + e.what());
  }
  m.end_to_end = product(m.text_association_cumulative, m.reading_exact_match);
  return m;
}

namespace {

std::vector<std::pair<std::string, const Rate*>> rows(const Metrics& m) {
  return {{"connector_detection", &m.connector_detection},
          {"text_detection", &m.text_detection},
          {"patch_association", &m.patch_association},
          {"clustering", &m.clustering},
          {"zone_mapping", &m.zone_mapping},
          {"reading_exact_match", &m.reading_exact_match},
          {"text_association_cumulative", &m.text_association_cumulative},
          {"end_to_end", &m.end_to_end},
          {"record_exact_match", &m.record_exact_match}};
}

}  // namespace

std::string metrics_to_json(const Metrics& m) {
  ojson j;
  for (const auto& [name, r] : rows(m)) {
    j[name] = {{"correct", r->correct}, {"total", r->total}, {"percent", r->percent()}};
  }
  j["spurious_records"] = m.spurious_records;
  return j.dump(2) + "\n";
}

std::string metrics_table(const Metrics& m) {
  std::ostringstream o;
  o << std::left << std::setw(30) << "metric" << std::right << std::setw(24) << "correct/total" << std::setw(9)
    << "rate" << "\n";
  for (const auto& [name, r] : rows(m)) {
    const std::string frac = std::to_string(r->correct) + "/" + std::to_string(r->total);
    const std::string pct = r->total > 0 ? r->percent() + "%" : r->percent();
    o << std::left << std::setw(30) << name << std::right << std::setw(24) << frac << std::setw(9) << pct << "\n";
  }
  o << std::left << std::setw(30) << "spurious_records" << std::right << std::setw(24) << m.spurious_records << "\n";
  return o.str();
}

}  // namespace sheetscan
