// Copyright 2026 The lesion-dcgan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcgan/binary_io.hpp"
#include "dcgan/error.hpp"
#include "dcgan/tensor.hpp"

namespace dcgan {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// [0,1] -> 0..255 after clamping, round half up.
inline std::uint8_t to_byte(double v) {
  const double c = std::clamp(std::isnan(v) ? 0.0 : v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

inline std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline GrayImage decode_pgm(std::string_view bytes, const std::string& what) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  if (token() != "P5") throw FormatError(what + ": not a P5 PGM");
  GrayImage img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw FormatError(what + ": maxval must be 255");
  } catch (const std::logic_error&) {
    throw FormatError(what + ": bad PGM header");
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() - pos != img.width * img.height) {
    throw FormatError(what + ": PGM payload size mismatch");
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

/// Tiles one channel of each [h,w,c] image row-major into a grid with a
/// 1-px black separator.
inline GrayImage tile_channel(const std::vector<Tensor>& images, std::size_t cols,
                              std::size_t channel) {
  if (images.empty()) throw ArgumentError("export_grid: no images");
  if (cols == 0) throw ArgumentError("export_grid: cols must be >= 1");
  const std::size_t h = images[0].dim(0), w = images[0].dim(1);
  const std::size_t used_cols = std::min(cols, images.size());
  const std::size_t rows = (images.size() + cols - 1) / cols;
  GrayImage img;
  img.width = used_cols * w + (used_cols - 1);
  img.height = rows * h + (rows - 1);
  img.pixels.assign(img.width * img.height, 0);
  for (std::size_t k = 0; k < images.size(); ++k) {
    const Tensor& t = images[k];
    if (t.rank() != 3 || t.dim(0) != h || t.dim(1) != w || channel >= t.dim(2)) {
      throw ShapeError("export_grid: inconsistent image shape " + t.shape().to_string());
    }
    const std::size_t oy = (k / cols) * (h + 1);
    const std::size_t ox = (k % cols) * (w + 1);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        img.pixels[(oy + y) * img.width + ox + x] = to_byte(t.at({y, x, channel}));
      }
    }
  }
  return img;
}

inline const std::vector<std::string>& grid_channel_suffixes() {
  static const std::vector<std::string> kSuffixes = {"_t2.pgm", "_adc.pgm", "_ktrans.pgm"};
  return kSuffixes;
}

/// Writes <path>_t2.pgm, <path>_adc.pgm and <path>_ktrans.pgm. Returns the
/// written paths.
inline std::vector<std::string> export_grid(const std::vector<Tensor>& images,
                                            std::size_t cols, const std::string& path) {
  std::vector<std::string> written;
  const auto& suffixes = grid_channel_suffixes();
  for (std::size_t c = 0; c < suffixes.size(); ++c) {
    const std::string file = path + suffixes[c];
    write_file(file, encode_pgm(tile_channel(images, cols, c)));
    written.push_back(file);
  }
  return written;
}

}  // namespace dcgan
