// SPDX-License-Identifier: Apache-2.0
//
// jrcup - active-RIS joint calibration and user positioning toolkit
// Copyright (C) 2026 jrcup contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Minimal RGB PNG writer (zlib-backed) plus a log-scaled colormap renderer
// for EB heat maps. Linking zlib is required when this header is used.

#ifndef JRCUP_HEATMAP_PNG_HPP
#define JRCUP_HEATMAP_PNG_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "jrcup/common.hpp"

namespace jrcup {

namespace detail {

inline void png_append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline void png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                      const std::vector<std::uint8_t>& payload) {
  png_append_u32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc =
      ::crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  png_append_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG stream.
inline std::vector<std::uint8_t> encode_png_rgb(const std::vector<std::uint8_t>& rgb, int width,
                                                int height) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("encode_png_rgb: bad dimensions");
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * static_cast<std::size_t>(width)));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    const auto* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + static_cast<std::size_t>(width) * 3);
  }
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("encode_png_rgb: deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<std::uint8_t> ihdr;
  detail::png_append_u32(ihdr, static_cast<std::uint32_t>(width));
  detail::png_append_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", compressed);
  detail::png_chunk(out, "IEND", {});
  return out;
}

/// Small perceptual colormap (viridis-like anchor ramp).
inline std::array<std::uint8_t, 3> colormap(double t) {
  static const double anchors[][3] = {
      {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
      {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
      {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
      {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 10.0;
  const int lo = std::min(9, static_cast<int>(pos));
  const double f = pos - lo;
  std::array<std::uint8_t, 3> rgb{};
  for (int c = 0; c < 3; ++c)
    rgb[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(
        255.0 * ((1 - f) * anchors[lo][c] + f * anchors[lo + 1][c]) + 0.5);
  return rgb;
}

/// Renders a value grid (row r = increasing y, written top-down) on a log10
/// scale between the finite min and the cap; non-finite cells use the cap.
inline void write_heatmap_png(const std::string& path, const Mat& values, double cap) {
  const int h = static_cast<int>(values.rows()), w = static_cast<int>(values.cols());
  double lo = inf, hi = -inf;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double v = values(r, c);
      if (std::isfinite(v) && v > 0) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  if (!std::isfinite(lo)) {
    lo = 1.0;
    hi = cap;
  }
  hi = std::min(std::max(hi, lo * (1 + 1e-12)), cap);
  const double llo = std::log10(lo), lhi = std::log10(std::max(hi, lo * 1.0000001));
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double v = values(r, c);
      if (!std::isfinite(v) || v <= 0) v = cap;
      v = std::min(v, cap);
      const double t = (std::log10(v) - llo) / (lhi - llo);
      const auto color = colormap(t);
      // row 0 of the matrix is the smallest y; draw it at the bottom
      const std::size_t px = (static_cast<std::size_t>(h - 1 - r) * w + c) * 3;
      rgb[px] = color[0];
      rgb[px + 1] = color[1];
      rgb[px + 2] = color[2];
    }
  const auto bytes = encode_png_rgb(rgb, w, h);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_heatmap_png: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace jrcup

#endif  // JRCUP_HEATMAP_PNG_HPP
