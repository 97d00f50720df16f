// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace uiinstruct {

/// 8-bit RGB raster, row-major, no padding between rows.
class Image {
 public:
  Image() = default;
  /// Throws std::invalid_argument for non-positive dimensions.
  Image(int width, int height, std::array<std::uint8_t, 3> fill = {0, 0, 0});
  /// Throws std::invalid_argument when pixels.size() != width * height * 3.
  static Image from_pixels(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  const std::uint8_t* at(int x, int y) const noexcept { return &pixels_[offset(x, y)]; }
  std::uint8_t* at(int x, int y) noexcept { return &pixels_[offset(x, y)]; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// PNG decoding; any PNG color type is converted to 8-bit RGB. Alpha is
/// composited over black. Throws UnreadableImage.
Image decode_png(std::span<const std::uint8_t> bytes);
Image read_png(const std::filesystem::path& path);

/// Reads only the IHDR chunk. Throws UnreadableImage.
ImageSize read_png_size(const std::filesystem::path& path);

/// Deterministic PNG encoding (same pixels, same bytes).
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace uiinstruct
