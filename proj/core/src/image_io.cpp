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
#include "sheetscan/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "sheetscan/error.hpp"

namespace sheetscan {

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayRaster decode_png(const std::vector<std::uint8_t>& data, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw Error(ErrorCode::IoError, "bad PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::IoError, "bad PNG " + path.string() + ": " + image.message);
  }
  return GrayRaster(int(image.width), int(image.height), std::move(pixels));
}

// Netpbm header token, skipping whitespace and comments.
std::string next_token(const std::vector<std::uint8_t>& data, std::size_t& pos) {
  for (;;) {
    while (pos < data.size() && std::isspace(data[pos])) ++pos;
    if (pos < data.size() && data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < data.size() && !std::isspace(data[pos])) tok.push_back(char(data[pos++]));
  return tok;
}

GrayRaster decode_pgm(const std::vector<std::uint8_t>& data, const std::filesystem::path& path) {
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos);
  if (magic != "P5") throw Error(ErrorCode::IoError, path.string() + ": only binary PGM (P5) is supported");
  int w = 0;
  int h = 0;
  int maxval = 0;
  try {
    w = std::stoi(next_token(data, pos));
    h = std::stoi(next_token(data, pos));
    maxval = std::stoi(next_token(data, pos));
  } catch (const std::exception&) {
    throw Error(ErrorCode::IoError, path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::IoError, path.string() + ": unsupported PGM geometry or depth");
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = std::size_t(w) * h;
  if (data.size() < pos + n) throw Error(ErrorCode::IoError, path.string() + ": truncated PGM");
  std::vector<std::uint8_t> levels(data.begin() + std::ptrdiff_t(pos), data.begin() + std::ptrdiff_t(pos + n));
  if (maxval != 255) {
    for (auto& v : levels) v = std::uint8_t(std::min(255, int(v) * 255 / maxval));
  }
  return GrayRaster(w, h, std::move(levels));
}

}  // namespace

GrayRaster read_gray(const std::filesystem::path& path) {
  const auto data = slurp(path);
  static const std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (data.size() >= 8 && std::memcmp(data.data(), kPngSig, 8) == 0) return decode_png(data, path);
  if (data.size() >= 2 && data[0] == 'P' && data[1] == '5') return decode_pgm(data, path);
  throw Error(ErrorCode::IoError, path.string() + ": neither PNG nor PGM (P5)");
}

void write_pgm(const GrayRaster& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.levels().data()), std::streamsize(img.levels().size()));
  if (!out) throw Error(ErrorCode::IoError, "short write " + path.string());
}

void write_png(const GrayRaster& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(img.width());
  image.height = png_uint_32(img.height());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.levels().data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string() + ": " + image.message);
  }
}

GrayRaster to_gray(const BinaryRaster& r) {
  std::vector<std::uint8_t> levels(r.bits().size());
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = r.bits()[i] ? 255 : 0;
  return GrayRaster(r.width(), r.height(), std::move(levels));
}

GrayRaster to_scan(const BinaryRaster& r) {
  std::vector<std::uint8_t> levels(r.bits().size());
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = r.bits()[i] ? 0 : 255;
  return GrayRaster(r.width(), r.height(), std::move(levels));
}

BinaryRaster from_gray(const GrayRaster& img) {
  std::vector<std::uint8_t> bits(img.levels().size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = img.levels()[i] >= 128 ? 1 : 0;
  return BinaryRaster(img.width(), img.height(), std::move(bits));
}

void write_binary_pgm(const BinaryRaster& r, const std::filesystem::path& path) { write_pgm(to_gray(r), path); }

BinaryRaster read_binary_pgm(const std::filesystem::path& path) { return from_gray(read_gray(path)); }

}  // namespace sheetscan
