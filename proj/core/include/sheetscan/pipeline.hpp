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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sheetscan/assoc.hpp"
#include "sheetscan/cloud_removal.hpp"
#include "sheetscan/code_reader.hpp"
#include "sheetscan/connector_detect.hpp"
#include "sheetscan/synth_corpus.hpp"
#include "sheetscan/template_ops.hpp"
#include "sheetscan/text_detect.hpp"
#include "sheetscan/zone_mapping.hpp"

namespace sheetscan {

struct PipelineConfig {
  std::filesystem::path templates_dir;  // TemplateSet plus one <id>.zones per template
  std::filesystem::path glyphs_dir;
  std::filesystem::path lexicon_path;
  std::filesystem::path grammar_path;

  double presence_fraction = 0.8;
  double ncc_threshold = 0.5;

  std::string cloud_segmenter = "geometric";
  GeometricCloudSegmenter::Params cloud;
  int median_window = 3;

  std::string arrow_classifier = "geometric";
  GeometricArrowClassifier::Params arrow;
  HoughParams hough;
  MergeParams merge;

  std::string text_detector = "proximity";
  WindowSpec window;
  ProximityTextDetector::Params text;
  /// Plain lines lying inside a text box grown by this margin are glyph strokes.
  int line_text_margin = 3;

  AssocParams assoc;

  std::string segment_classifier = "nearest_centroid";
  NearestCentroidClassifier::Params glyph;
  /// Empty means half the median segment height of each patch.
  std::optional<double> overlap_thresh;
  int max_edit = 2;

  int workers = 1;
};

/// Flat key=value text; unknown keys and missing asset paths are errors.
/// Relative paths resolve against base_dir.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& source = "<string>");
PipelineConfig load_config(const std::filesystem::path& path);
/// Round-trips through parse_config; paths are written as given.
std::string format_config(const PipelineConfig& cfg);

struct ReportRecord {
  std::string template_id;
  std::string zone_id;
  DamageCode code;
  std::string raw;
  Connector connector;
  BBox patch_bbox;
  bool no_zone_hit = false;
  bool zone_low_confidence = false;
  double zone_distance = 0.0;
};

/// Per-stage counts. Each stage accounts for everything it received.
struct StageDiagnostics {
  int templates_total = 0;
  int templates_matched = 0;
  std::vector<std::string> templates_missing;  // NoMatch
  std::int64_t cloud_pixels = 0;
  int components = 0;
  int arrow_components = 0;
  int hough_lines = 0;
  int merged_lines = 0;
  int lines_in_text = 0;
  int plain_connectors = 0;
  int connectors = 0;  // arrow_components + plain_connectors
  int text_boxes = 0;
  int associated = 0;
  int unassociated = 0;  // connectors = associated + unassociated
  int split_boxes = 0;
  int split_dropped = 0;  // associated = patches + split_dropped
  int patches = 0;
  int empty_patches = 0;
  int unresolved_codes = 0;
  int zone_hits = 0;
  int zone_misses = 0;  // patches = zone_hits + zone_misses
  int records = 0;

  bool conserved() const;
};

struct SheetReport {
  std::string sheet_id;
  std::vector<ReportRecord> records;
  StageDiagnostics diagnostics;
  /// Every connector found on the sheet, before association.
  std::vector<Connector> connectors;
  std::vector<BBox> text_boxes;
};

std::string report_to_json(const SheetReport& r);
SheetReport report_from_json(const std::string& text);
void save_report(const SheetReport& r, const std::filesystem::path& path);
SheetReport load_report(const std::filesystem::path& path);

/// Loaded assets and pluggable stages. Immutable after construction, so one
/// instance can serve several worker threads.
class Pipeline {
 public:
  using Log = std::function<void(const std::string&)>;

  explicit Pipeline(const PipelineConfig& cfg);
  Pipeline(const PipelineConfig& cfg, TemplateSet templates, std::vector<ZoneMap> zone_maps, Alphabet alphabet,
           Lexicon lexicon);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  SheetReport digitize(const BinaryRaster& sheet, const std::string& sheet_id, const Log& log = {}) const;

  const PipelineConfig& config() const { return cfg_; }
  const TemplateSet& templates() const { return templates_; }

 private:
  void build_stages();

  PipelineConfig cfg_;
  TemplateSet templates_;
  std::vector<ZoneMap> zone_maps_;
  Lexicon lexicon_;
  std::unique_ptr<CloudSegmenter> cloud_;
  std::unique_ptr<ArrowClassifier> arrow_;
  std::unique_ptr<TextDetector> text_;
  std::unique_ptr<SegmentClassifier> glyphs_;
};

/// Zone maps for every template of a set, read from <dir>/<id>.zones.
std::vector<ZoneMap> load_zone_maps(const TemplateSet& set, const std::filesystem::path& dir);

/// Exact counts; rates and percentages are derived only for display.
struct Rate {
  std::int64_t correct = 0;
  std::int64_t total = 0;

  double value() const { return total > 0 ? double(correct) / double(total) : 0.0; }
  /// Percentage truncated to one decimal, e.g. "89.7"; "n/a" when total is 0.
  std::string percent() const;
};

/// Product of two rates kept as a fraction.
Rate product(const Rate& a, const Rate& b);

struct Metrics {
  Rate connector_detection;
  Rate text_detection;
  Rate patch_association;
  Rate clustering;
  Rate zone_mapping;
  Rate reading_exact_match;
  Rate text_association_cumulative;
  Rate end_to_end;
  Rate record_exact_match;
  std::int64_t spurious_records = 0;
};

struct EvalParams {
  double iou_threshold = 0.5;
  double endpoint_tolerance = 10.0;
};

/// Reports and truths are paired by sheet id; a sheet present on only one side
/// raises IdMismatch.
Metrics evaluate(const std::vector<SheetReport>& reports, const std::vector<GroundTruth>& truths,
                 const EvalParams& params = {});

/// Stored stage counts: JSON object of name -> [correct, total] for
/// connector_detection, text_detection, patch_association, clustering,
/// text_association_cumulative and reading_exact_match.
Metrics metrics_from_counts(const std::string& json_text);

std::string metrics_to_json(const Metrics& m);
std::string metrics_table(const Metrics& m);

}  // namespace sheetscan
