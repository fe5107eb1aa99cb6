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
#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sheetscan/error.hpp"
#include "sheetscan/image_io.hpp"
#include "sheetscan/pipeline.hpp"
#include "sheetscan/synth_corpus.hpp"

namespace fs = std::filesystem;

namespace sheetscan {

namespace {

BinaryRaster read_sheet(const fs::path& p) { return binarize_otsu(read_gray(p)); }

std::vector<fs::path> files_with(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
}

/// Glyph set, lexicon and grammar of the synthetic font.
void write_assets(const fs::path& dir) {
  fs::create_directories(dir);
  const SyntheticFont& font = SyntheticFont::standard();
  font.alphabet().save(dir / "glyphs");
  std::string lex;
  for (const auto& c : enumerate_codes(font)) lex += c + "\n";
  write_text(dir / "lexicon.txt", lex);
  std::string rules = "# pattern -> replacement, applied in order; ? matches one character\n";
  for (const auto& r : default_rules()) rules += r.pattern + " -> " + r.replacement + "\n";
  write_text(dir / "grammar.txt", rules);
}

struct CorpusPaths {
  fs::path sheets;
  fs::path config;
};

CorpusPaths write_corpus(const SceneSpec& spec, int sheet_count, const fs::path& out, bool verbose) {
  const SceneLayout layout = generate_layout(spec);
  fs::create_directories(out / "sheets");
  fs::create_directories(out / "templates");
  save_template_set(layout.templates, out / "templates");
  for (const auto& zm : layout.zone_maps) save_zone_map(zm, out / "templates" / (zm.template_id + ".zones"));
  write_assets(out);
  for (int i = 0; i < sheet_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "_%04d", i);
    const auto sheet = generate_sheet(spec, layout, mix_seed(spec.seed, std::uint64_t(i)), spec.set_id + id);
    write_png(to_scan(sheet.raster), out / "sheets" / (sheet.truth.sheet_id + ".png"));
    save_truth(sheet.truth, out / "sheets" / (sheet.truth.sheet_id + ".json"));
    if (verbose) {
      std::cerr << sheet.truth.sheet_id << ": " << sheet.truth.annotations.size() << " annotations\n";
    }
  }
  PipelineConfig cfg;
  cfg.templates_dir = "templates";
  cfg.glyphs_dir = "glyphs";
  cfg.lexicon_path = "lexicon.txt";
  cfg.grammar_path = "grammar.txt";
  write_text(out / "pipeline.conf", format_config(cfg));
  return {out / "sheets", out / "pipeline.conf"};
}

std::vector<SheetReport> run_digitize(const Pipeline& pipe, const std::vector<fs::path>& sheets,
                                      const fs::path& out_dir, bool verbose) {
  fs::create_directories(out_dir);
  std::vector<SheetReport> reports(sheets.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < sheets.size(); i = next++) {
      try {
        const std::string id = sheets[i].stem().string();
        Pipeline::Log log;
        if (verbose) {
          log = [&log_mutex, id](const std::string& msg) {
            const std::lock_guard lock(log_mutex);
            std::cerr << "[" << id << "] " << msg << "\n";
          };
        }
        reports[i] = pipe.digitize(read_sheet(sheets[i]), id, log);
        save_report(reports[i], out_dir / (id + ".json"));
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(pipe.config().workers, int(sheets.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

std::vector<GroundTruth> load_truths(const fs::path& dir) {
  std::vector<GroundTruth> out;
  for (const auto& p : files_with(dir, ".json")) out.push_back(load_truth(p));
  return out;
}

std::vector<SheetReport> load_reports(const fs::path& dir) {
  std::vector<SheetReport> out;
  for (const auto& p : files_with(dir, ".json")) out.push_back(load_report(p));
  return out;
}

void print_metrics(const Metrics& m, const fs::path& json_out) {
  std::cout << metrics_table(m);
  if (!json_out.empty()) write_text(json_out, metrics_to_json(m));
}

SceneSpec demo_spec() {
  SceneSpec s;
  s.seed = 2024;
  s.layout_seed = 11;
  s.set_id = "demo";
  s.template_count = 3;
  s.zones_per_template = 4;
  s.annotations = 2;
  return s;
}

int input_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 1;
}

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::IdMismatch:
    case ErrorCode::GenerationInfeasible:
      return true;
    default:
      return false;
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"sheetscan: digitize inspection sheets"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Stream per-stage diagnostics to stderr");

  auto* ext = app.add_subcommand("extract-template", "Extract static templates from a set of registered sheets");
  std::vector<std::string> ext_sheets;
  std::string ext_out;
  double presence = 0.8;
  std::string set_id = "set";
  ext->add_option("sheets", ext_sheets, "Sheet images (PNG or PGM)")->required();
  ext->add_option("-o,--out", ext_out, "Output TemplateSet directory")->required();
  ext->add_option("--presence", presence, "Fraction of sheets a static pixel must be ink on");
  ext->add_option("--set-id", set_id, "Set identifier written to the manifest");

  auto* dig = app.add_subcommand("digitize", "Digitize sheets into JSON reports");
  std::vector<std::string> dig_sheets;
  std::string dig_templates;
  std::string dig_config;
  std::string dig_out;
  dig->add_option("sheets", dig_sheets, "Sheet images (PNG or PGM)")->required();
  dig->add_option("--templates", dig_templates, "TemplateSet directory (overrides the config)");
  dig->add_option("--config", dig_config, "Pipeline config file")->required();
  dig->add_option("-o,--out", dig_out, "Report directory")->required();

  auto* gen = app.add_subcommand("generate", "Generate a synthetic corpus with ground truth");
  std::string gen_spec;
  std::string gen_out;
  int gen_sheets = 0;
  gen->add_option("--spec", gen_spec, "Scene spec file (key=value)")->required();
  gen->add_option("-o,--out", gen_out, "Corpus directory")->required();
  gen->add_option("--sheets", gen_sheets, "Number of sheets")->default_val(10);

  auto* eva = app.add_subcommand("evaluate", "Score reports against ground truth");
  std::string eva_reports;
  std::string eva_truth;
  std::string eva_fixture;
  std::string eva_json;
  double eva_iou = 0.5;
  auto* opt_reports = eva->add_option("--reports", eva_reports, "Report directory");
  auto* opt_truth = eva->add_option("--truth", eva_truth, "Ground-truth directory");
  auto* opt_fixture = eva->add_option("--fixture", eva_fixture, "Stored stage counts (JSON)");
  eva->add_option("--json", eva_json, "Also write the metrics as JSON");
  eva->add_option("--iou", eva_iou, "Box IoU threshold");
  opt_reports->needs(opt_truth);
  opt_truth->needs(opt_reports);
  opt_fixture->excludes(opt_reports)->excludes(opt_truth);

  auto* demo = app.add_subcommand("demo", "Generate, digitize and evaluate a small bundled corpus");
  std::string demo_dir;
  demo->add_option("-o,--out", demo_dir, "Working directory (default: a temporary directory)");

  auto* gly = app.add_subcommand("glyphs", "Write the synthetic glyph set, lexicon and grammar");
  std::string gly_out;
  gly->add_option("-o,--out", gly_out, "Output directory")->required();

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (*ext) {
      std::vector<BinaryRaster> sheets;
      for (const auto& s : ext_sheets) sheets.push_back(read_sheet(s));
      TemplateSet set{set_id, extract_templates(sheets, presence)};
      save_template_set(set, ext_out);
      std::cout << "extracted " << set.templates.size() << " templates into " << ext_out << "\n";
      std::cout << "zone maps (<id>.zones) must be authored next to them before digitizing\n";
      return 0;
    }
    if (*dig) {
      PipelineConfig cfg = load_config(dig_config);
      if (!dig_templates.empty()) {
        if (!fs::is_directory(dig_templates)) return input_error(dig_templates + " is not a directory");
        cfg.templates_dir = dig_templates;
      }
      const Pipeline pipe(cfg);
      std::vector<fs::path> sheets(dig_sheets.begin(), dig_sheets.end());
      const auto reports = run_digitize(pipe, sheets, dig_out, verbose);
      std::size_t records = 0;
      for (const auto& r : reports) records += r.records.size();
      std::cout << "digitized " << reports.size() << " sheets, " << records << " records\n";
      return 0;
    }
    if (*gen) {
      const SceneSpec spec = load_scene_spec(gen_spec);
      if (gen_sheets < 1) return input_error("--sheets must be >= 1");
      write_corpus(spec, gen_sheets, gen_out, verbose);
      std::cout << "wrote " << gen_sheets << " sheets to " << gen_out << "\n";
      return 0;
    }
    if (*eva) {
      Metrics m;
      if (!eva_fixture.empty()) {
        std::ifstream in(eva_fixture);
        if (!in) return input_error("cannot open " + eva_fixture);
        std::stringstream ss;
        ss << in.rdbuf();
        m = metrics_from_counts(ss.str());
      } else if (!eva_reports.empty()) {
        EvalParams params;
        params.iou_threshold = eva_iou;
        m = evaluate(load_reports(eva_reports), load_truths(eva_truth), params);
      } else {
        return input_error("evaluate needs --reports and --truth, or --fixture");
      }
      print_metrics(m, eva_json);
      return 0;
    }
    if (*demo) {
      fs::path dir = demo_dir.empty() ? fs::temp_directory_path() / "sheetscan_demo" : fs::path(demo_dir);
      fs::remove_all(dir / "corpus");
      fs::remove_all(dir / "reports");
      const auto paths = write_corpus(demo_spec(), 3, dir / "corpus", verbose);
      const Pipeline pipe(load_config(paths.config));
      const auto reports = run_digitize(pipe, files_with(paths.sheets, ".png"), dir / "reports", verbose);
      for (const auto& r : reports) {
        for (const auto& rec : r.records) {
          std::cout << r.sheet_id << "  " << (rec.no_zone_hit ? "-" : rec.template_id + "/" + rec.zone_id) << "  "
                    << rec.code.text << (rec.code.resolved ? "" : " (unresolved)") << "\n";
        }
      }
      print_metrics(evaluate(reports, load_truths(paths.sheets)), {});
      std::cout << "demo files in " << dir.string() << "\n";
      return 0;
    }
    if (*gly) {
      write_assets(gly_out);
      std::cout << "wrote glyphs, lexicon.txt and grammar.txt to " << gly_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace sheetscan
