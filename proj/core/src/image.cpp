// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/image.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>
#include <png.h>

#include "uiinstruct/errors.hpp"

namespace uiinstruct {

Image::Image(int width, int height, std::array<std::uint8_t, 3> fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

Image Image::from_pixels(int width, int height, std::vector<std::uint8_t> pixels) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw std::invalid_argument("pixel buffer size does not match dimensions");
  }
  Image image;
  image.width_ = width;
  image.height_ = height;
  image.pixels_ = std::move(pixels);
  return image;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()) == 0) {
    throw UnreadableImage(std::string("not a readable PNG: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw UnreadableImage("PNG has zero dimensions");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png));
  png_color black{0, 0, 0};
  if (png_image_finish_read(&png, &black, pixels.data(), 0, nullptr) == 0) {
    throw UnreadableImage(std::string("PNG decode failed: ") + png.message);
  }
  return Image::from_pixels(static_cast<int>(png.width), static_cast<int>(png.height), std::move(pixels));
}

Image read_png(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const std::runtime_error& e) {
    throw UnreadableImage(e.what());
  }
  try {
    return decode_png(bytes);
  } catch (const UnreadableImage& e) {
    throw UnreadableImage(path.string() + ": " + e.what());
  }
}

ImageSize read_png_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableImage("cannot open image " + path.string());
  std::array<unsigned char, 24> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  static constexpr std::array<unsigned char, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
      !std::equal(kSignature.begin(), kSignature.end(), header.begin()) ||
      std::memcmp(header.data() + 12, "IHDR", 4) != 0) {
    throw UnreadableImage("not a PNG file: " + path.string());
  }
  auto be32 = [&](std::size_t at) {
    return (static_cast<std::uint32_t>(header[at]) << 24) | (static_cast<std::uint32_t>(header[at + 1]) << 16) |
           (static_cast<std::uint32_t>(header[at + 2]) << 8) | static_cast<std::uint32_t>(header[at + 3]);
  };
  const auto width = be32(16);
  const auto height = be32(20);
  if (width == 0 || height == 0 || width > 0x7fffffff || height > 0x7fffffff) {
    throw UnreadableImage("PNG has invalid dimensions: " + path.string());
  }
  return {static_cast<int>(width), static_cast<int>(height)};
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.empty()) throw std::invalid_argument("cannot encode an empty image");
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (png_image_write_get_memory_size(png, size, 0, image.pixels().data(), 0, nullptr) == 0) {
    throw std::runtime_error(std::string("PNG size query failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels().data(), 0, nullptr) == 0) {
    throw std::runtime_error(std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  write_file_bytes(path, encode_png(image));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace uiinstruct
