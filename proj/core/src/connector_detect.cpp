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
#include "sheetscan/connector_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <tuple>

#include "sheetscan/error.hpp"

namespace sheetscan {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Moments {
  PointF centroid;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
};

template <class Range>
Moments moments(const Range& pts) {
  Moments m;
  double n = 0.0;
  for (const auto& p : pts) {
    m.centroid.x += p.x;
    m.centroid.y += p.y;
    n += 1.0;
  }
  m.centroid.x /= n;
  m.centroid.y /= n;
  for (const auto& p : pts) {
    const double dx = p.x - m.centroid.x;
    const double dy = p.y - m.centroid.y;
    m.sxx += dx * dx;
    m.sxy += dx * dy;
    m.syy += dy * dy;
  }
  m.sxx /= n;
  m.sxy /= n;
  m.syy /= n;
  return m;
}

PointF major_axis(const Moments& m) {
  const double angle = 0.5 * std::atan2(2.0 * m.sxy, m.sxx - m.syy);
  return {std::cos(angle), std::sin(angle)};
}

double point_segment_distance(PointF p, PointF a, PointF b) {
  const PointF ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double perpendicular_distance(PointF p, const LineSegment& s) {
  const PointF d = s.p2 - s.p1;
  const double len = d.norm();
  if (len == 0.0) return distance(p, s.p1);
  return std::abs(cross(d, p - s.p1)) / len;
}

}  // namespace

LineSegment make_segment(PointF a, PointF b) {
  if (yx_less(b, a)) std::swap(a, b);
  double angle = std::atan2(b.y - a.y, b.x - a.x) / kDeg;
  while (angle < 0.0) angle += 180.0;
  while (angle >= 180.0) angle -= 180.0;
  return {a, b, angle};
}

std::pair<PointF, PointF> principal_axis_endpoints(const std::vector<Point>& pixels) {
  if (pixels.empty()) throw Error(ErrorCode::InvalidArgument, "empty pixel set has no axis");
  const Moments m = moments(pixels);
  const PointF u = major_axis(m);
  double tmin = 0.0;
  double tmax = 0.0;
  for (const Point& p : pixels) {
    const double t = dot(PointF(p) - m.centroid, u);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  return {m.centroid + u * tmin, m.centroid + u * tmax};
}

BinaryRaster normalize_component(const ConnectedComponent& c, int size) {
  const int side = std::max(c.bbox.width(), c.bbox.height());
  // Offsets that centre the component on the square canvas.
  const int ox = (side - c.bbox.width()) / 2;
  const int oy = (side - c.bbox.height()) / 2;
  BinaryRaster out(size, size);
  const double scale = double(side) / double(size);
  if (scale >= 1.0) {
    for (const Point& p : c.pixels) {
      const int u = std::min(size - 1, int((p.x - c.bbox.x0 + ox) / scale));
      const int v = std::min(size - 1, int((p.y - c.bbox.y0 + oy) / scale));
      out.set(u, v);
    }
    return out;
  }
  BinaryRaster square(side, side);
  for (const Point& p : c.pixels) square.set(p.x - c.bbox.x0 + ox, p.y - c.bbox.y0 + oy);
  for (int v = 0; v < size; ++v) {
    for (int u = 0; u < size; ++u) {
      const int sx = std::min(side - 1, int((u + 0.5) * scale));
      const int sy = std::min(side - 1, int((v + 0.5) * scale));
      if (square.at(sx, sy)) out.set(u, v);
    }
  }
  return out;
}

GeometricArrowClassifier::Features GeometricArrowClassifier::features(const ConnectedComponent& c) const {
  Features f;
  {
    const auto [a, b] = principal_axis_endpoints(c.pixels);
    f.length = distance(a, b);
  }
  const BinaryRaster norm = normalize_component(c, params_.input_size);
  std::vector<PointF> pts;
  for (int y = 0; y < norm.height(); ++y) {
    for (int x = 0; x < norm.width(); ++x) {
      if (norm.at(x, y)) pts.emplace_back(x, y);
    }
  }
  const Moments m = moments(pts);
  const double mean = 0.5 * (m.sxx + m.syy);
  const double spread = std::sqrt(0.25 * (m.sxx - m.syy) * (m.sxx - m.syy) + m.sxy * m.sxy);
  // Pixel-area variance keeps single-row components finite.
  const double l1 = mean + spread + 1.0 / 12.0;
  const double l2 = mean - spread + 1.0 / 12.0;
  f.elongation = std::sqrt(l1 / l2);

  const PointF u = major_axis(m);
  double tmin = 0.0;
  double tmax = 0.0;
  for (const PointF& p : pts) {
    const double t = dot(p - m.centroid, u);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  const double radius = std::max(2.0, params_.disc_fraction * (tmax - tmin));
  const PointF end_a = m.centroid + u * (tmin + radius);
  const PointF end_b = m.centroid + u * (tmax - radius);
  double ink_a = 0.0;
  double ink_b = 0.0;
  for (const PointF& p : pts) {
    if (distance(p, end_a) <= radius) ink_a += 1.0;
    if (distance(p, end_b) <= radius) ink_b += 1.0;
  }
  f.end_ratio = std::max(ink_a, ink_b) / std::max(1.0, std::min(ink_a, ink_b));
  return f;
}

ArrowVerdict GeometricArrowClassifier::classify(const ConnectedComponent& c) const {
  if (c.pixels.empty()) throw Error(ErrorCode::InvalidArgument, "cannot classify an empty component");
  const Features f = features(c);
  ArrowVerdict v;
  if (f.length < params_.min_length || f.elongation < params_.min_elongation) return v;
  v.score = f.end_ratio / (f.end_ratio + params_.head_ratio);
  v.label = f.end_ratio >= params_.head_ratio ? ArrowLabel::Arrow : ArrowLabel::Background;
  return v;
}

ArrowVerdict classify_component(const ConnectedComponent& c, const ArrowClassifier& clf) {
  if (c.pixels.empty()) throw Error(ErrorCode::InvalidArgument, "cannot classify an empty component");
  return clf.classify(c);
}

std::vector<LineSegment> detect_lines(const BinaryRaster& r, const HoughParams& params) {
  if (params.rho_resolution <= 0 || params.theta_resolution <= 0 || params.accumulator_threshold <= 0 ||
      params.min_line_length <= 0 || params.max_gap <= 0) {
    throw Error(ErrorCode::InvalidArgument, "Hough parameters must be strictly positive");
  }
  std::vector<Point> pixels;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (r.at(x, y)) pixels.push_back({x, y});
    }
  }
  std::vector<LineSegment> out;
  if (pixels.empty()) return out;

  const int n_theta = std::max(1, int(std::lround(180.0 / params.theta_resolution)));
  std::vector<double> cos_t(n_theta);
  std::vector<double> sin_t(n_theta);
  for (int k = 0; k < n_theta; ++k) {
    cos_t[k] = std::cos(k * params.theta_resolution * kDeg);
    sin_t[k] = std::sin(k * params.theta_resolution * kDeg);
  }
  const double diag = std::hypot(double(r.width()), double(r.height()));
  const int n_rho = int(std::ceil(2.0 * diag / params.rho_resolution)) + 2;
  auto rho_bin = [&](PointF p, int k) {
    return int(std::floor((p.x * cos_t[k] + p.y * sin_t[k] + diag) / params.rho_resolution + 0.5));
  };
  std::vector<int> acc(std::size_t(n_theta) * n_rho, 0);
  auto cell = [&](int k, int b) -> int& { return acc[std::size_t(k) * n_rho + b]; };
  std::vector<int> bins(pixels.size() * std::size_t(n_theta));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (int k = 0; k < n_theta; ++k) {
      const int b = rho_bin(PointF(pixels[i]), k);
      bins[i * n_theta + k] = b;
      ++cell(k, b);
    }
  }

  using Peak = std::tuple<int, int, int>;  // votes, -theta index, -rho bin
  std::priority_queue<Peak> heap;
  for (int k = 0; k < n_theta; ++k) {
    for (int b = 0; b < n_rho; ++b) {
      if (cell(k, b) >= params.accumulator_threshold) heap.emplace(cell(k, b), -k, -b);
    }
  }
  std::vector<char> active(pixels.size(), 1);
  std::vector<char> dead(acc.size(), 0);
  const double band = 1.5 + 0.5 * params.rho_resolution;

  auto withdraw = [&](std::size_t i) {
    active[i] = 0;
    for (int k = 0; k < n_theta; ++k) --cell(k, bins[i * n_theta + k]);
  };

  while (!heap.empty()) {
    auto [votes, nk, nb] = heap.top();
    heap.pop();
    const int k = -nk;
    const int b = -nb;
    if (dead[std::size_t(k) * n_rho + b]) continue;
    if (cell(k, b) != votes) {
      if (cell(k, b) >= params.accumulator_threshold) heap.emplace(cell(k, b), nk, nb);
      continue;
    }
    const double rho = b * params.rho_resolution - diag;
    const PointF normal{cos_t[k], sin_t[k]};
    const PointF along{-sin_t[k], cos_t[k]};
    std::vector<std::pair<double, std::size_t>> hits;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      if (!active[i]) continue;
      const PointF p(pixels[i]);
      if (std::abs(dot(p, normal) - rho) <= band) hits.emplace_back(dot(p, along), i);
    }
    std::sort(hits.begin(), hits.end());
    bool emitted = false;
    std::size_t run_start = 0;
    for (std::size_t j = 1; j <= hits.size(); ++j) {
      if (j < hits.size() && hits[j].first - hits[j - 1].first <= params.max_gap) continue;
      if (j > run_start && hits[j - 1].first - hits[run_start].first >= params.min_line_length) {
        std::vector<PointF> run;
        for (std::size_t q = run_start; q < j; ++q) run.emplace_back(pixels[hits[q].second]);
        const Moments m = moments(run);
        const PointF u = major_axis(m);
        double tmin = 0.0;
        double tmax = 0.0;
        for (const PointF& p : run) {
          tmin = std::min(tmin, dot(p - m.centroid, u));
          tmax = std::max(tmax, dot(p - m.centroid, u));
        }
        const LineSegment seg = make_segment(m.centroid + u * tmin, m.centroid + u * tmax);
        out.push_back(seg);
        emitted = true;
        const double reach = band + 1.0;
        const double lo_x = std::min(seg.p1.x, seg.p2.x) - reach;
        const double hi_x = std::max(seg.p1.x, seg.p2.x) + reach;
        const double lo_y = std::min(seg.p1.y, seg.p2.y) - reach;
        const double hi_y = std::max(seg.p1.y, seg.p2.y) + reach;
        for (std::size_t i = 0; i < pixels.size(); ++i) {
          if (!active[i]) continue;
          const PointF p(pixels[i]);
          if (p.x < lo_x || p.x > hi_x || p.y < lo_y || p.y > hi_y) continue;
          if (point_segment_distance(p, seg.p1, seg.p2) <= reach) withdraw(i);
        }
      }
      run_start = j;
    }
    if (!emitted) {
      dead[std::size_t(k) * n_rho + b] = 1;
    } else if (cell(k, b) >= params.accumulator_threshold) {
      heap.emplace(cell(k, b), nk, nb);
    }
  }
  std::sort(out.begin(), out.end(), [](const LineSegment& a, const LineSegment& b) {
    if (a.p1 != b.p1) return yx_less(a.p1, b.p1);
    return yx_less(a.p2, b.p2);
  });
  return out;
}

bool mergeable(const LineSegment& a, const LineSegment& b, const MergeParams& params) {
  double dtheta = std::abs(a.slope_angle - b.slope_angle);
  dtheta = std::min(dtheta, 180.0 - dtheta);
  if (dtheta > params.slope_tol) return false;
  // Gap between the segments: shortest endpoint-to-segment distance.
  const PointF ends_a[2] = {a.p1, a.p2};
  const PointF ends_b[2] = {b.p1, b.p2};
  double gap = std::numeric_limits<double>::infinity();
  for (PointF e : ends_a) gap = std::min(gap, point_segment_distance(e, b.p1, b.p2));
  for (PointF e : ends_b) gap = std::min(gap, point_segment_distance(e, a.p1, a.p2));
  if (gap > params.gap_max) return false;
  // Collinearity is judged at the facing endpoints.
  double best = std::numeric_limits<double>::infinity();
  PointF near_a;
  PointF near_b;
  for (PointF ea : ends_a) {
    for (PointF eb : ends_b) {
      if (distance(ea, eb) < best) {
        best = distance(ea, eb);
        near_a = ea;
        near_b = eb;
      }
    }
  }
  return std::max(perpendicular_distance(near_b, a), perpendicular_distance(near_a, b)) <= params.collinearity_tol;
}

std::vector<LineSegment> merge_lines(const std::vector<LineSegment>& lines, const MergeParams& params) {
  std::vector<LineSegment> cur = lines;
  for (;;) {
    const std::size_t n = cur.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (find(i) != find(j) && mergeable(cur[i], cur[j], params)) {
          parent[find(j)] = find(i);
          any = true;
        }
      }
    }
    if (!any) break;
    std::vector<std::vector<PointF>> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      groups[find(i)].push_back(cur[i].p1);
      groups[find(i)].push_back(cur[i].p2);
    }
    std::vector<LineSegment> next;
    for (const auto& g : groups) {
      if (g.empty()) continue;
      std::size_t bi = 0;
      std::size_t bj = 1;
      double best = -1.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
          if (distance(g[i], g[j]) > best) {
            best = distance(g[i], g[j]);
            bi = i;
            bj = j;
          }
        }
      }
      next.push_back(make_segment(g[bi], g[bj]));
    }
    cur = std::move(next);
  }
  std::sort(cur.begin(), cur.end(), [](const LineSegment& a, const LineSegment& b) {
    if (a.p1 != b.p1) return yx_less(a.p1, b.p1);
    return yx_less(a.p2, b.p2);
  });
  return cur;
}

Connector orient_connector(const Connector& c, const BBox& patch_bbox) {
  const PointF centre = patch_bbox.center();
  const double da = distance(c.head, centre);
  const double db = distance(c.tail, centre);
  Connector out = c;
  out.oriented = true;
  PointF near = c.tail;
  PointF far = c.head;
  if (da < db) {
    std::swap(near, far);
  } else if (da == db) {
    out.low_confidence = true;
    if (yx_less(c.head, c.tail)) std::swap(near, far);
  }
  out.tail = near;
  out.head = far;
  return out;
}

}  // namespace sheetscan
