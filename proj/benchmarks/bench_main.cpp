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
#include <benchmark/benchmark.h>

#include "sheetscan/pipeline.hpp"

using namespace sheetscan;

namespace {

struct Scene {
  SceneSpec spec;
  SceneLayout layout;
  GeneratedSheet sheet;
  Scene() {
    spec.seed = 77;
    spec.noise = {0.0, 0.002, 0.3, 0.5, 0.5};
    layout = generate_layout(spec);
    sheet = generate_sheet(spec, layout, 3, "bench");
  }
};

const Scene& scene() {
  static const Scene s;
  return s;
}

void BM_NccLocate(benchmark::State& state) {
  const Scene& s = scene();
  const Template& t = s.layout.templates.templates.front();
  for (auto _ : state) benchmark::DoNotOptimize(ncc_locate(s.sheet.raster, t));
}
BENCHMARK(BM_NccLocate)->Unit(benchmark::kMillisecond);

void BM_NccLocatorPerTemplate(benchmark::State& state) {
  const Scene& s = scene();
  const NccLocator locator(s.sheet.raster);
  for (auto _ : state) {
    for (const auto& t : s.layout.templates.templates) benchmark::DoNotOptimize(locator.locate(t));
  }
}
BENCHMARK(BM_NccLocatorPerTemplate)->Unit(benchmark::kMillisecond);

void BM_HoughLines(benchmark::State& state) {
  BinaryRaster r(480, 360);
  Rng rng(5);
  for (int i = 0; i < state.range(0); ++i) {
    draw_line(r, {rng.uniform(0.0, 479.0), rng.uniform(0.0, 359.0)}, {rng.uniform(0.0, 479.0), rng.uniform(0.0, 359.0)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect_lines(r));
}
BENCHMARK(BM_HoughLines)->Arg(1)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ClassifySegment(benchmark::State& state) {
  const SyntheticFont& font = SyntheticFont::standard();
  const NearestCentroidClassifier clf(font.alphabet());
  const BinaryRaster g = font.render('K', 6.0, 1.1);
  std::vector<Point> px;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      if (g.at(x, y)) px.push_back({x, y});
    }
  }
  const Segment seg = Segment::from_pixels(px);
  for (auto _ : state) benchmark::DoNotOptimize(classify_segment(seg, clf));
}
BENCHMARK(BM_ClassifySegment)->Unit(benchmark::kMicrosecond);

void BM_DigitizeSheet(benchmark::State& state) {
  const Scene& s = scene();
  const SyntheticFont& font = SyntheticFont::standard();
  const Pipeline p(PipelineConfig{}, s.layout.templates, s.layout.zone_maps, font.alphabet(),
                   Lexicon{enumerate_codes(font), default_rules()});
  for (auto _ : state) benchmark::DoNotOptimize(p.digitize(s.sheet.raster, "bench"));
}
BENCHMARK(BM_DigitizeSheet)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
