// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "uiinstruct/image.hpp"

namespace uiinstruct {

enum class ResizeFilter {
  /// Exact pixel-area integration. Identity at scale 1.
  kArea,
  kBilinear,
  kNearest,
};

std::optional<ResizeFilter> parse_resize_filter(std::string_view name) noexcept;
std::string_view resize_filter_name(ResizeFilter filter) noexcept;

struct PreprocessSpec {
  int target_side = 336;
  std::array<std::uint8_t, 3> pad_color = {0, 0, 0};
  ResizeFilter resize_filter = ResizeFilter::kArea;
};

/// Where the original content landed, in output pixel coordinates
/// (fractional; right/bottom exclusive).
struct ContentRegion {
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;

  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
};

struct Padding {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;
};

/// Symmetric padding to a square of side max(width, height); the odd
/// pixel goes to the right or bottom.
Padding square_padding(int width, int height) noexcept;

Image pad_to_square(const Image& image, std::array<std::uint8_t, 3> color);
Image resize(const Image& image, int width, int height, ResizeFilter filter);

struct PreprocessResult {
  Image image;
  Padding padding;
  ContentRegion content;
};

/// Pads to square then resizes to target_side x target_side. Nothing is
/// cropped. Throws UnreadableImage for an empty image and
/// std::invalid_argument for a non-positive target side.
PreprocessResult preprocess_image(const Image& image, const PreprocessSpec& spec);

}  // namespace uiinstruct
