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
// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "sheetscan/error.hpp"
#include "sheetscan/pipeline.hpp"
#include "suites.hpp"

using namespace sheetscan;
namespace fs = std::filesystem;

namespace {

const fs::path kData{SHEETSCAN_DATA_DIR};

// Tolerances and limits.
constexpr double kFixtureSeconds = 1.0;
constexpr double kSuiteSeconds = 60.0;
constexpr int kSuiteInstances = 500;
constexpr int kZoneInstances = 1000;
constexpr int kCorpusSheets = 50;
constexpr double kCleanSeconds = 180.0;
constexpr double kCleanRecordMin = 0.95;
constexpr double kCleanReadingMin = 0.99;
constexpr double kDegradedRecordMin = 0.75;
constexpr double kEndToEndTarget = 82.3;
constexpr double kEndToEndTolerance = 0.2;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 1) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

std::string rate_text(const Rate& r) {
  return std::to_string(r.correct) + "/" + std::to_string(r.total) + " (" + r.percent() + ")";
}

// Runs the CLI with stdout and stderr captured.
int cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "sheetscan");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::ostringstream out_buf, err_buf;
  auto* old_out = std::cout.rdbuf(out_buf.rdbuf());
  auto* old_err = std::cerr.rdbuf(err_buf.rdbuf());
  const int rc = cli_main(int(args.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (err) *err = err_buf.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct CorpusRun {
  bool ok = false;
  std::string error;
  std::vector<SheetReport> reports;
  Metrics metrics;
  std::string metrics_json;  // as written by the CLI
  double digitize_seconds = 0.0;
};

CorpusRun digitize_and_evaluate(const fs::path& corpus, const std::string& tag) {
  CorpusRun run;
  std::vector<std::string> args{"digitize", "--config", (corpus / "pipeline.conf").string(), "-o",
                                (corpus / ("reports_" + tag)).string()};
  for (const auto& p : files_with(corpus / "sheets", ".png")) args.push_back(p.string());
  const auto t0 = std::chrono::steady_clock::now();
  std::string err;
  if (const int rc = cli(args, &err); rc != 0) {
    run.error = "digitize exited " + std::to_string(rc) + ": " + err;
    return run;
  }
  run.digitize_seconds = seconds_since(t0);
  const fs::path metrics_path = corpus / ("metrics_" + tag + ".json");
  if (const int rc = cli({"evaluate", "--reports", (corpus / ("reports_" + tag)).string(), "--truth",
                          (corpus / "sheets").string(), "--json", metrics_path.string()},
                         &err);
      rc != 0) {
    run.error = "evaluate exited " + std::to_string(rc) + ": " + err;
    return run;
  }
  run.metrics_json = slurp(metrics_path);
  std::vector<GroundTruth> truths;
  for (const auto& p : files_with(corpus / "sheets", ".json")) truths.push_back(load_truth(p));
  for (const auto& p : files_with(corpus / ("reports_" + tag), ".json")) run.reports.push_back(load_report(p));
  run.metrics = evaluate(run.reports, truths);
  if (metrics_to_json(run.metrics) != run.metrics_json) {
    run.error = "CLI metrics disagree with in-process evaluation";
    return run;
  }
  run.ok = true;
  return run;
}

bool generate(const fs::path& spec, const fs::path& out, std::string* error) {
  fs::remove_all(out);
  std::string err;
  const int rc = cli({"generate", "--spec", spec.string(), "-o", out.string(), "--sheets",
                      std::to_string(kCorpusSheets)},
                     &err);
  if (rc != 0) *error = "generate exited " + std::to_string(rc) + ": " + err;
  return rc == 0;
}

// 1. Stored stage counts reproduce the published rates.
Outcome fixture_arithmetic() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Metrics m = metrics_from_counts(slurp(kData / "fixtures" / "stage_counts.json"));
  const struct {
    const char* name;
    const Rate* rate;
    const char* want;
  } rows[] = {{"connector_detection", &m.connector_detection, "89.7"},
              {"text_detection", &m.text_detection, "91.6"},
              {"patch_association", &m.patch_association, "95.1"},
              {"clustering", &m.clustering, "95.6"}};
  for (const auto& r : rows) {
    o.require(r.rate->percent() == r.want,
              std::string(r.name) + " " + rate_text(*r.rate) + " expected " + r.want);
  }
  const double e2e = 100.0 * m.end_to_end.value();
  o.require(std::abs(e2e - kEndToEndTarget) <= kEndToEndTolerance,
            "end_to_end " + fmt(e2e, 2) + " outside " + fmt(kEndToEndTarget) + " +- " + fmt(kEndToEndTolerance));
  const double secs = seconds_since(t0);
  o.require(secs < kFixtureSeconds, "took " + fmt(secs, 3) + " s");
  if (o.pass) o.detail = "end_to_end " + m.end_to_end.percent() + ", " + fmt(secs, 3) + " s";
  return o;
}

// 2. Randomized equivalence against independent oracles.
Outcome oracle_suites() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<suites::SuiteResult> results{
      suites::ncc(1001, kSuiteInstances),       suites::components(1002, kSuiteInstances),
      suites::otsu(1003, kSuiteInstances),      suites::ranking(1004, kSuiteInstances),
      suites::levenshtein(1005, kSuiteInstances), suites::zones(1006, kZoneInstances),
      suites::split(1007, kSuiteInstances)};
  int instances = 0;
  for (const auto& r : results) {
    instances += r.instances;
    o.require(r.ok(), r.name + ": " + std::to_string(r.failures) + " failures, first: " + r.first_failure);
    o.require(r.instances >= kSuiteInstances, r.name + " ran only " + std::to_string(r.instances));
  }
  const double secs = seconds_since(t0);
  o.require(secs < kSuiteSeconds, "took " + fmt(secs) + " s");
  if (o.pass) o.detail = std::to_string(results.size()) + " suites, " + std::to_string(instances) + " instances, " +
                         fmt(secs) + " s";
  return o;
}

// 3. Fixed constants of the method.
Outcome constants() {
  Outcome o;
  const auto merged = [](double gap) {
    return merge_lines({make_segment({0, 0}, {100, 0}), make_segment({100 + gap, 0}, {200 + gap, 0})}).size() == 1;
  };
  o.require(merged(49.0), "49 px gap not merged");
  o.require(!merged(51.0), "51 px gap merged");

  const auto windows = window_sheet(BinaryRaster(1750, 1200));
  const WindowSpec spec;
  bool sized = spec.width == 480 && spec.height == 360;
  bool overlapping = spec.stride_x() < spec.width && spec.stride_y() < spec.height;
  for (const auto& w : windows) {
    const bool interior = w.offset.x + 480 <= 1750 && w.offset.y + 360 <= 1200;
    if (interior) sized = sized && w.raster.width() == 480 && w.raster.height() == 360;
  }
  o.require(sized, "windows are not 480x360");
  o.require(overlapping && windows.size() > 1, "windows do not overlap");

  const Alphabet full = Alphabet::load(kData / "glyphs");
  std::vector<std::pair<char, BinaryRaster>> glyphs;
  for (const auto& g : full.glyphs()) glyphs.emplace_back(g.symbol, g.source);
  o.require(full.size() == 31, "shipped alphabet has " + std::to_string(full.size()) + " symbols");
  auto rejects = [](std::vector<std::pair<char, BinaryRaster>> set) {
    try {
      Alphabet a(std::move(set));
    } catch (const Error&) {
      return true;
    }
    return false;
  };
  auto fewer = glyphs;
  fewer.pop_back();
  auto more = glyphs;
  more.emplace_back('Z', glyphs.front().second);
  o.require(rejects(fewer), "30-symbol set accepted");
  o.require(rejects(more), "32-symbol set accepted");

  const Lexicon lex = load_lexicon(kData / "lexicon.txt", kData / "grammar.txt");
  const DamageCode d = correct_sequence("1B)", lex);
  o.require(d.text == "(B)" && d.resolved, "\"1B)\" corrected to \"" + d.text + "\"");
  if (o.pass) o.detail = "merge 49/51, " + std::to_string(windows.size()) + " windows, 31 symbols, 1B) -> (B)";
  return o;
}

// 4. Noise-free corpus.
Outcome clean_corpus(const fs::path& work) {
  Outcome o;
  const fs::path corpus = work / "clean";
  const auto t0 = std::chrono::steady_clock::now();
  std::string err;
  if (!generate(kData / "clean.spec", corpus, &err)) {
    o.require(false, err);
    return o;
  }
  const CorpusRun run = digitize_and_evaluate(corpus, "a");
  const double secs = seconds_since(t0);
  if (!run.ok) {
    o.require(false, run.error);
    return o;
  }
  const Metrics& m = run.metrics;
  o.require(m.record_exact_match.value() >= kCleanRecordMin, "record " + rate_text(m.record_exact_match));
  o.require(m.reading_exact_match.value() >= kCleanReadingMin, "reading " + rate_text(m.reading_exact_match));
  o.require(m.patch_association.total > 0 && m.patch_association.correct == m.patch_association.total,
            "association " + rate_text(m.patch_association));
  o.require(secs < kCleanSeconds, "took " + fmt(secs) + " s");
  if (o.pass) {
    o.detail = "record " + rate_text(m.record_exact_match) + ", reading " + rate_text(m.reading_exact_match) +
               ", association " + rate_text(m.patch_association) + ", " + fmt(secs) + " s";
  }
  return o;
}

// 5. Degraded corpus.
Outcome degraded_corpus(const fs::path& work) {
  Outcome o;
  const fs::path corpus = work / "degraded";
  std::string err;
  if (!generate(kData / "degraded.spec", corpus, &err)) {
    o.require(false, err);
    return o;
  }
  const CorpusRun run = digitize_and_evaluate(corpus, "a");
  if (!run.ok) {
    o.require(false, run.error);
    return o;
  }
  const Metrics& m = run.metrics;
  o.require(m.record_exact_match.value() >= kDegradedRecordMin, "record " + rate_text(m.record_exact_match));
  int broken = 0;
  for (const auto& r : run.reports) broken += !r.diagnostics.conserved();
  o.require(broken == 0, std::to_string(broken) + " reports violate conservation");
  o.require(int(run.reports.size()) == kCorpusSheets, std::to_string(run.reports.size()) + " reports");
  if (o.pass) {
    o.detail = "record " + rate_text(m.record_exact_match) + ", " + std::to_string(run.reports.size()) +
               " reports conserved, " + fmt(run.digitize_seconds) + " s";
  }
  return o;
}

// 6. Repeated runs are byte-identical.
Outcome determinism(const fs::path& work) {
  Outcome o;
  const fs::path corpus = work / "degraded";
  if (!fs::exists(corpus / "reports_a")) {
    o.require(false, "degraded corpus missing");
    return o;
  }
  const CorpusRun a = digitize_and_evaluate(corpus, "b");
  const CorpusRun b = digitize_and_evaluate(corpus, "c");
  if (!a.ok || !b.ok) {
    o.require(false, a.ok ? b.error : a.error);
    return o;
  }
  int differing = 0, compared = 0;
  for (const auto& p : files_with(corpus / "reports_a", ".json")) {
    ++compared;
    const std::string ref = slurp(p);
    differing += slurp(corpus / "reports_b" / p.filename()) != ref || slurp(corpus / "reports_c" / p.filename()) != ref;
  }
  o.require(differing == 0, std::to_string(differing) + " of " + std::to_string(compared) + " reports differ");
  o.require(a.metrics_json == b.metrics_json && a.metrics_json == slurp(corpus / "metrics_a.json"),
            "metrics JSON differs");
  if (o.pass) o.detail = std::to_string(compared) + " reports and metrics identical across 3 runs";
  return o;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "sheetscan_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fixture_arithmetic", fixture_arithmetic},
      {"oracle_suites", oracle_suites},
      {"method_constants", constants},
      {"clean_corpus", [&] { return clean_corpus(work); }},
      {"degraded_corpus", [&] { return degraded_corpus(work); }},
      {"determinism", [&] { return determinism(work); }}};
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  fs::remove_all(work);
  std::cout << (criteria.size() - std::size_t(failed)) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
