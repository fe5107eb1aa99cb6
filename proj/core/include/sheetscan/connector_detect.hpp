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

#include <string>
#include <utility>
#include <vector>

#include "sheetscan/raster.hpp"

namespace sheetscan {

struct LineSegment {
  PointF p1;
  PointF p2;
  /// Direction of p1 -> p2 folded into [0, 180).
  double slope_angle = 0.0;

  double length() const { return distance(p1, p2); }
};

/// Orders the endpoints by (y, x) and fills in the slope angle.
LineSegment make_segment(PointF a, PointF b);

enum class ConnectorKind { ArrowHeaded, PlainLine };

struct Connector {
  PointF head;
  PointF tail;
  ConnectorKind kind = ConnectorKind::PlainLine;
  /// "c<component id>" for classifier hits, "l<index>" for Hough lines.
  std::string source;
  bool oriented = false;
  bool low_confidence = false;
};

enum class ArrowLabel { Arrow, Background };

struct ArrowVerdict {
  ArrowLabel label = ArrowLabel::Background;
  double score = 0.0;
};

/// Binary arrow/background decision for one connected component.
class ArrowClassifier {
 public:
  virtual ~ArrowClassifier() = default;
  virtual std::string id() const = 0;
  virtual ArrowVerdict classify(const ConnectedComponent& c) const = 0;
};

/// Renders a component centred on a square canvas (aspect ratio kept) and
/// rescales it to size x size. Shrinking keeps any ink in a cell's footprint.
BinaryRaster normalize_component(const ConnectedComponent& c, int size = 128);

/// Endpoints of the pixel set along its principal axis.
std::pair<PointF, PointF> principal_axis_endpoints(const std::vector<Point>& pixels);

/// Baseline: on the normalized 128x128 rendering, compares ink inside equal
/// discs at the two ends of the principal axis. A prominent head makes one
/// end much heavier than the other.
class GeometricArrowClassifier final : public ArrowClassifier {
 public:
  struct Params {
    double head_ratio = 1.8;
    double min_elongation = 3.0;
    /// Principal-axis length in source pixels; shorter components are glyph-sized.
    double min_length = 40.0;
    int input_size = 128;
    /// Disc radius as a fraction of the normalized axis length.
    double disc_fraction = 0.15;
  };

  struct Features {
    double elongation = 0.0;
    double end_ratio = 0.0;
    double length = 0.0;  // source pixels
  };

  GeometricArrowClassifier() = default;
  explicit GeometricArrowClassifier(Params p) : params_(p) {}

  std::string id() const override { return "geometric"; }
  ArrowVerdict classify(const ConnectedComponent& c) const override;
  Features features(const ConnectedComponent& c) const;

 private:
  Params params_;
};

ArrowVerdict classify_component(const ConnectedComponent& c, const ArrowClassifier& clf);

struct HoughParams {
  double rho_resolution = 1.0;    // px
  double theta_resolution = 1.0;  // degrees
  int accumulator_threshold = 20;
  double min_line_length = 25.0;
  double max_gap = 5.0;
};

/// (rho, theta) voting followed by greedy peak extraction: the strongest cell is
/// traced into runs along its line, runs long enough become segments, and their
/// pixels are withdrawn from the accumulator before the next peak is taken.
std::vector<LineSegment> detect_lines(const BinaryRaster& r, const HoughParams& params = {});

struct MergeParams {
  double slope_tol = 3.0;  // degrees
  double gap_max = 50.0;   // px
  double collinearity_tol = 5.0;
};

/// Transitively joins segments of (nearly) equal slope that lie on a common line
/// and whose gap is within gap_max. Repeats until nothing more merges.
std::vector<LineSegment> merge_lines(const std::vector<LineSegment>& lines, const MergeParams& params = {});

bool mergeable(const LineSegment& a, const LineSegment& b, const MergeParams& params);

/// Tail is the endpoint nearer the patch centre. Exact ties put the tail at the
/// smaller (y, x) endpoint and mark the connector low-confidence.
Connector orient_connector(const Connector& c, const BBox& patch_bbox);

}  // namespace sheetscan
