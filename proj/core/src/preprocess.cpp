// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uiinstruct/errors.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

struct Tap {
  int index;
  double weight;
};

// For each destination sample, the source samples it reads and their weights
// (weights sum to 1).
std::vector<std::vector<Tap>> build_taps(int src, int dst, ResizeFilter filter) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    auto& row = taps[static_cast<std::size_t>(o)];
    switch (filter) {
      case ResizeFilter::kArea: {
        const double lo = o * scale;
        const double hi = (o + 1) * scale;
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
        for (int i = first; i <= last; ++i) {
          const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
          if (overlap > 0) row.push_back({i, overlap / scale});
        }
        break;
      }
      case ResizeFilter::kBilinear: {
        const double center = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
        const int left = static_cast<int>(std::floor(center));
        const double frac = center - left;
        row.push_back({left, 1.0 - frac});
        if (frac > 0 && left + 1 < src) row.push_back({left + 1, frac});
        break;
      }
      case ResizeFilter::kNearest: {
        const int i = std::min(src - 1, static_cast<int>(std::floor((o + 0.5) * scale)));
        row.push_back({i, 1.0});
        break;
      }
    }
  }
  return taps;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

std::optional<ResizeFilter> parse_resize_filter(std::string_view name) noexcept {
  if (text::iequals(name, "area")) return ResizeFilter::kArea;
  if (text::iequals(name, "bilinear")) return ResizeFilter::kBilinear;
  if (text::iequals(name, "nearest")) return ResizeFilter::kNearest;
  return std::nullopt;
}

std::string_view resize_filter_name(ResizeFilter filter) noexcept {
  switch (filter) {
    case ResizeFilter::kArea:
      return "area";
    case ResizeFilter::kBilinear:
      return "bilinear";
    case ResizeFilter::kNearest:
      return "nearest";
  }
  return "area";
}

Padding square_padding(int width, int height) noexcept {
  const int side = std::max(width, height);
  Padding p;
  p.left = (side - width) / 2;
  p.right = side - width - p.left;
  p.top = (side - height) / 2;
  p.bottom = side - height - p.top;
  return p;
}

Image pad_to_square(const Image& image, std::array<std::uint8_t, 3> color) {
  if (image.width() == image.height()) return image;
  const auto pad = square_padding(image.width(), image.height());
  const int side = std::max(image.width(), image.height());
  Image canvas(side, side, color);
  const auto row_bytes = static_cast<std::size_t>(image.width()) * 3;
  for (int y = 0; y < image.height(); ++y) {
    std::copy_n(image.at(0, y), row_bytes, canvas.at(pad.left, y + pad.top));
  }
  return canvas;
}

Image resize(const Image& image, int width, int height, ResizeFilter filter) {
  if (image.empty()) throw UnreadableImage("cannot resize an empty image");
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize target must be positive");
  if (width == image.width() && height == image.height()) return image;

  const auto xtaps = build_taps(image.width(), width, filter);
  const auto ytaps = build_taps(image.height(), height, filter);

  // Horizontal pass into a floating-point intermediate, then vertical.
  const auto src_h = static_cast<std::size_t>(image.height());
  std::vector<double> mid(static_cast<std::size_t>(width) * src_h * 3, 0.0);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      double* dst = &mid[(static_cast<std::size_t>(y) * width + x) * 3];
      for (const auto& tap : xtaps[static_cast<std::size_t>(x)]) {
        const auto* px = image.at(tap.index, y);
        dst[0] += tap.weight * px[0];
        dst[1] += tap.weight * px[1];
        dst[2] += tap.weight * px[2];
      }
    }
  }

  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (const auto& tap : ytaps[static_cast<std::size_t>(y)]) {
        const double* src = &mid[(static_cast<std::size_t>(tap.index) * width + x) * 3];
        acc[0] += tap.weight * src[0];
        acc[1] += tap.weight * src[1];
        acc[2] += tap.weight * src[2];
      }
      auto* px = out.at(x, y);
      px[0] = to_byte(acc[0]);
      px[1] = to_byte(acc[1]);
      px[2] = to_byte(acc[2]);
    }
  }
  return out;
}

PreprocessResult preprocess_image(const Image& image, const PreprocessSpec& spec) {
  if (image.empty()) throw UnreadableImage("cannot preprocess an empty image");
  if (spec.target_side <= 0) throw std::invalid_argument("target_side must be positive");

  PreprocessResult result;
  result.padding = square_padding(image.width(), image.height());
  const int side = std::max(image.width(), image.height());
  const double scale = static_cast<double>(spec.target_side) / side;
  result.content.x0 = result.padding.left * scale;
  result.content.y0 = result.padding.top * scale;
  result.content.x1 = (result.padding.left + image.width()) * scale;
  result.content.y1 = (result.padding.top + image.height()) * scale;
  result.image = resize(pad_to_square(image, spec.pad_color), spec.target_side, spec.target_side,
                        spec.resize_filter);
  return result;
}

}  // namespace uiinstruct
