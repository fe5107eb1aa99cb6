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
#include "sheetscan/template_ops.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "sheetscan/error.hpp"
#include "sheetscan/image_io.hpp"
#include "sheetscan/kv_file.hpp"

namespace sheetscan {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int fft_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

void collect_region(const ContourNode& node, std::vector<Point>& out) {
  out.insert(out.end(), node.pixels.begin(), node.pixels.end());
  for (const auto& c : node.children) collect_region(c, out);
}

}  // namespace

const Template* TemplateSet::find(const std::string& id) const {
  for (const auto& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

BinaryRaster static_raster(std::span<const BinaryRaster> sheets, double presence_fraction) {
  if (sheets.size() < 2) throw Error(ErrorCode::InvalidArgument, "template extraction needs at least 2 sheets");
  if (!(presence_fraction > 0.5 && presence_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "presence_fraction must lie in (0.5, 1]");
  }
  const int w = sheets[0].width();
  const int h = sheets[0].height();
  for (const auto& s : sheets) {
    if (s.width() != w || s.height() != h) {
      throw Error(ErrorCode::DimensionMismatch, "all sheets of a set must share dimensions");
    }
  }
  std::vector<int> counts(std::size_t(w) * h, 0);
  for (const auto& s : sheets) {
    const auto bits = s.bits();
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += bits[i];
  }
  const double need = presence_fraction * double(sheets.size()) - 1e-9;
  std::vector<std::uint8_t> bits(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) bits[i] = double(counts[i]) >= need ? 1 : 0;
  return BinaryRaster(w, h, std::move(bits));
}

std::vector<Template> extract_templates(std::span<const BinaryRaster> sheets, double presence_fraction) {
  const BinaryRaster stat = static_raster(sheets, presence_fraction);
  const ContourNode root = contour_tree(stat);
  std::vector<Template> out;
  for (const auto& node : root.children) {
    std::vector<Point> region;
    collect_region(node, region);
    BinaryRaster raster(node.bbox.width(), node.bbox.height());
    for (const Point& p : region) raster.set(p.x - node.bbox.x0, p.y - node.bbox.y0);
    out.push_back(Template{std::move(raster), node.bbox, "T" + std::to_string(out.size())});
  }
  return out;
}

struct NccLocator::Impl {
  int width = 0;
  int height = 0;
  int fft_w = 0;
  int fft_h = 0;
  std::vector<std::int64_t> integral;  // (width+1) x (height+1)
  FftwBuffer<fftw_complex> sheet_spectrum;

  std::int64_t window_energy(int x, int y, int w, int h) const {
    auto I = [&](int xx, int yy) { return integral[std::size_t(yy) * (width + 1) + xx]; };
    return I(x + w, y + h) - I(x, y + h) - I(x + w, y) + I(x, y);
  }
};

NccLocator::NccLocator(const BinaryRaster& sheet) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.width = sheet.width();
  m.height = sheet.height();
  m.integral.assign(std::size_t(m.width + 1) * (m.height + 1), 0);
  for (int y = 0; y < m.height; ++y) {
    std::int64_t row = 0;
    for (int x = 0; x < m.width; ++x) {
      row += sheet.at(x, y) ? 1 : 0;
      m.integral[std::size_t(y + 1) * (m.width + 1) + x + 1] = m.integral[std::size_t(y) * (m.width + 1) + x + 1] + row;
    }
  }
  // No wrap-around can reach a valid offset when the transform is at least as
  // large as the sheet, because x + x' <= width - 1 for every valid placement.
  m.fft_w = fft_size(m.width);
  m.fft_h = fft_size(m.height);
  const std::size_t real_n = std::size_t(m.fft_w) * m.fft_h;
  const std::size_t cplx_n = std::size_t(m.fft_h) * (m.fft_w / 2 + 1);
  auto real = fftw_alloc<double>(real_n);
  m.sheet_spectrum = fftw_alloc<fftw_complex>(cplx_n);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_2d(m.fft_h, m.fft_w, real.get(), m.sheet_spectrum.get(), FFTW_ESTIMATE);
  }
  std::fill(real.get(), real.get() + real_n, 0.0);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) real[std::size_t(y) * m.fft_w + x] = sheet.at(x, y) ? 1.0 : 0.0;
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

NccLocator::~NccLocator() = default;

NccMatch NccLocator::locate(const Template& tmpl) const {
  const Impl& m = *impl_;
  const int tw = tmpl.raster.width();
  const int th = tmpl.raster.height();
  if (tw > m.width || th > m.height) throw Error(ErrorCode::InvalidArgument, "template larger than sheet");
  const std::int64_t t_energy = tmpl.raster.count();
  if (t_energy == 0) throw Error(ErrorCode::DegenerateInput, "template " + tmpl.id + " has no ink");

  const std::size_t real_n = std::size_t(m.fft_w) * m.fft_h;
  const std::size_t cplx_n = std::size_t(m.fft_h) * (m.fft_w / 2 + 1);
  auto real = fftw_alloc<double>(real_n);
  auto spectrum = fftw_alloc<fftw_complex>(cplx_n);
  fftw_plan forward;
  fftw_plan inverse;
  {
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_r2c_2d(m.fft_h, m.fft_w, real.get(), spectrum.get(), FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_2d(m.fft_h, m.fft_w, spectrum.get(), real.get(), FFTW_ESTIMATE);
  }
  std::fill(real.get(), real.get() + real_n, 0.0);
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) real[std::size_t(y) * m.fft_w + x] = tmpl.raster.at(x, y) ? 1.0 : 0.0;
  }
  fftw_execute(forward);
  // correlation = IFFT(conj(T) * I)
  for (std::size_t i = 0; i < cplx_n; ++i) {
    const std::complex<double> t(spectrum[i][0], -spectrum[i][1]);
    const std::complex<double> s(m.sheet_spectrum[i][0], m.sheet_spectrum[i][1]);
    const std::complex<double> p = t * s;
    spectrum[i][0] = p.real();
    spectrum[i][1] = p.imag();
  }
  fftw_execute(inverse);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }

  const double scale = 1.0 / double(real_n);
  NccMatch best{{-1, -1}, -std::numeric_limits<double>::infinity()};
  for (int y = 0; y + th <= m.height; ++y) {
    for (int x = 0; x + tw <= m.width; ++x) {
      const std::int64_t energy = m.window_energy(x, y, tw, th);
      if (energy == 0) continue;
      // Binary inputs: the correlation is an exact overlap count.
      const auto overlap = std::llround(real[std::size_t(y) * m.fft_w + x] * scale);
      const double score = double(overlap) / std::sqrt(double(t_energy) * double(energy));
      if (score > best.score) best = {{x, y}, score};
    }
  }
  if (best.location.x < 0) {
    throw Error(ErrorCode::DegenerateInput, "sheet window energy is zero at every offset");
  }
  return best;
}

NccMatch ncc_locate(const BinaryRaster& sheet, const Template& tmpl) { return NccLocator(sheet).locate(tmpl); }

BinaryRaster subtract_template(const BinaryRaster& sheet, const Template& tmpl, Point location) {
  const BinaryRaster& t = tmpl.raster;
  if (location.x < 0 || location.y < 0 || location.x + t.width() > sheet.width() ||
      location.y + t.height() > sheet.height()) {
    throw Error(ErrorCode::OutOfBounds, "template placement falls outside the sheet");
  }
  BinaryRaster out = sheet;
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      if (t.at(x, y)) out.set(location.x + x, location.y + y, false);
    }
  }
  return out;
}

void save_template_set(const TemplateSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw Error(ErrorCode::IoError, "cannot write manifest in " + dir.string());
  manifest << "set_id=" << set.set_id << "\n";
  std::string ids;
  for (const auto& t : set.templates) ids += (ids.empty() ? "" : ",") + t.id;
  manifest << "templates=" << ids << "\n";
  for (const auto& t : set.templates) {
    const BBox& b = t.origin_hint;
    manifest << t.id << ".origin_hint=" << b.x0 << ',' << b.y0 << ',' << b.x1 << ',' << b.y1 << "\n";
    write_binary_pgm(t.raster, dir / (t.id + ".pgm"));
  }
}

TemplateSet load_template_set(const std::filesystem::path& dir) {
  const auto entries = read_kv_file(dir / "manifest.txt");
  TemplateSet set;
  std::vector<std::string> ids;
  std::map<std::string, BBox> hints;
  for (const auto& kv : entries) {
    if (kv.key == "set_id") {
      set.set_id = kv.value;
    } else if (kv.key == "templates") {
      ids = split(kv.value, ',');
    } else if (kv.key.size() > 12 && kv.key.ends_with(".origin_hint")) {
      const auto parts = split(kv.value, ',');
      if (parts.size() != 4) throw Error(ErrorCode::ParseError, "origin_hint needs x0,y0,x1,y1: " + kv.key);
      try {
        hints[kv.key.substr(0, kv.key.size() - 12)] = {std::stoi(parts[0]), std::stoi(parts[1]),
                                                       std::stoi(parts[2]), std::stoi(parts[3])};
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad origin_hint for " + kv.key);
      }
    } else {
      throw Error(ErrorCode::ParseError, "unknown manifest key " + kv.key);
    }
  }
  if (ids.empty()) throw Error(ErrorCode::ParseError, dir.string() + ": manifest lists no templates");
  for (const auto& id : ids) {
    if (set.find(id) != nullptr) throw Error(ErrorCode::ParseError, "duplicate template id " + id);
    BinaryRaster raster = read_binary_pgm(dir / (id + ".pgm"));
    if (raster.count() == 0) throw Error(ErrorCode::ParseError, "template " + id + " has no ink");
    set.templates.push_back(Template{std::move(raster), hints.count(id) ? hints[id] : BBox{}, id});
  }
  return set;
}

}  // namespace sheetscan
