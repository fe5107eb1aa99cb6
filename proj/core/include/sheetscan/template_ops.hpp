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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sheetscan/raster.hpp"

namespace sheetscan {

struct Template {
  BinaryRaster raster;
  /// Where the template was found on the extraction pages.
  BBox origin_hint;
  std::string id;
};

struct TemplateSet {
  std::string set_id;
  std::vector<Template> templates;

  const Template* find(const std::string& id) const;
};

struct NccMatch {
  Point location;  // top-left offset of the template on the sheet
  double score = 0.0;
};

/// Static ink of a set of registered sheets: a pixel is kept when it is ink on
/// at least \p presence_fraction of them. Each depth-1 region of the static
/// raster (with everything nested inside it) becomes one template.
std::vector<Template> extract_templates(std::span<const BinaryRaster> sheets, double presence_fraction = 0.8);

/// Static raster alone, before the contour split.
BinaryRaster static_raster(std::span<const BinaryRaster> sheets, double presence_fraction);

/// Normalized cross-correlation search over every offset that keeps the
/// template inside the sheet. Highest score wins, ties go to the smallest (y, x).
NccMatch ncc_locate(const BinaryRaster& sheet, const Template& tmpl);

/// Reuses the sheet spectrum and energy table across several templates.
class NccLocator {
 public:
  explicit NccLocator(const BinaryRaster& sheet);
  ~NccLocator();
  NccLocator(const NccLocator&) = delete;
  NccLocator& operator=(const NccLocator&) = delete;

  NccMatch locate(const Template& tmpl) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// sheet AND NOT template inside the placed window; untouched elsewhere.
BinaryRaster subtract_template(const BinaryRaster& sheet, const Template& tmpl, Point location);

/// Directory layout: manifest.txt (set_id, template ids, origin hints) plus one
/// <id>.pgm per template.
void save_template_set(const TemplateSet& set, const std::filesystem::path& dir);
TemplateSet load_template_set(const std::filesystem::path& dir);

}  // namespace sheetscan
