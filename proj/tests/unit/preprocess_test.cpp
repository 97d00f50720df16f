// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/preprocess.hpp"

namespace uiinstruct {
namespace {

double mean_intensity(const Image& image) {
  const auto px = image.pixels();
  return std::accumulate(px.begin(), px.end(), 0.0) / static_cast<double>(px.size());
}

Image gradient(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.at(x, y);
      p[0] = static_cast<std::uint8_t>((x * 7 + y) % 256);
      p[1] = static_cast<std::uint8_t>((y * 3) % 256);
      p[2] = static_cast<std::uint8_t>((x ^ y) % 256);
    }
  }
  return img;
}

TEST(SquarePadding, OddPixelGoesRightOrBottom) {
  const auto p = square_padding(1125, 2436);
  EXPECT_EQ(p.left, 655);
  EXPECT_EQ(p.right, 656);
  EXPECT_EQ(p.top, 0);
  EXPECT_EQ(p.bottom, 0);
  const auto wide = square_padding(300, 101);
  EXPECT_EQ(wide.top, 99);
  EXPECT_EQ(wide.bottom, 100);
  const auto square = square_padding(50, 50);
  EXPECT_EQ(square.left + square.right + square.top + square.bottom, 0);
}

TEST(Preprocess, TallScreenshotBecomesSquareWithoutCropping) {
  const Image white(1125, 2436, {255, 255, 255});
  const auto result = preprocess_image(white, {});
  EXPECT_EQ(result.image.width(), 336);
  EXPECT_EQ(result.image.height(), 336);

  const double in_aspect = 1125.0 / 2436.0;
  const double out_aspect = result.content.width() / result.content.height();
  EXPECT_LT(std::abs(out_aspect - in_aspect) / in_aspect, 0.01);
  EXPECT_NEAR(result.content.height(), 336.0, 1e-9);
  EXPECT_NEAR(result.content.x0, 655.0 * 336 / 2436, 1e-9);

  // Area resampling keeps total intensity, so all content survived.
  EXPECT_NEAR(mean_intensity(result.image), 255.0 * 1125 / 2436, 0.5);
  // Columns well inside the content region are pure content.
  const int mid = 168;
  for (int y = 0; y < 336; ++y) EXPECT_EQ(result.image.at(mid, y)[0], 255);
  EXPECT_EQ(result.image.at(0, 100)[0], 0);
  EXPECT_EQ(result.image.at(335, 100)[0], 0);
}

TEST(Preprocess, PadColorIsUsed) {
  PreprocessSpec spec;
  spec.pad_color = {10, 20, 30};
  const auto result = preprocess_image(Image(10, 40, {200, 200, 200}), spec);
  const auto* corner = result.image.at(0, 0);
  EXPECT_EQ(corner[0], 10);
  EXPECT_EQ(corner[1], 20);
  EXPECT_EQ(corner[2], 30);
}

TEST(Preprocess, AreaFilterIsIdentityAtScaleOne) {
  const auto img = gradient(336, 336);
  EXPECT_EQ(preprocess_image(img, {}).image, img);
  EXPECT_EQ(resize(img, 336, 336, ResizeFilter::kArea), img);
}

TEST(Preprocess, AllFiltersProduceTargetSize) {
  const auto img = gradient(200, 90);
  for (auto f : {ResizeFilter::kArea, ResizeFilter::kBilinear, ResizeFilter::kNearest}) {
    PreprocessSpec spec;
    spec.resize_filter = f;
    spec.target_side = 64;
    const auto r = preprocess_image(img, spec);
    EXPECT_EQ(r.image.width(), 64);
    EXPECT_EQ(r.image.height(), 64);
    EXPECT_EQ(parse_resize_filter(resize_filter_name(f)), f);
  }
  EXPECT_FALSE(parse_resize_filter("lanczos").has_value());
}

TEST(Preprocess, RejectsBadInput) {
  EXPECT_THROW(preprocess_image(Image(), {}), UnreadableImage);
  PreprocessSpec spec;
  spec.target_side = 0;
  EXPECT_THROW(preprocess_image(Image(4, 4), spec), std::invalid_argument);
}

TEST(Preprocess, Deterministic) {
  const auto img = gradient(123, 457);
  EXPECT_EQ(encode_png(preprocess_image(img, {}).image), encode_png(preprocess_image(img, {}).image));
}

TEST(Png, RoundTripAndHeaderSize) {
  testing::TempDir dir;
  const auto img = gradient(37, 19);
  write_png(dir / "g.png", img);
  EXPECT_EQ(read_png(dir / "g.png"), img);
  const auto size = read_png_size(dir / "g.png");
  EXPECT_EQ(size.width, 37);
  EXPECT_EQ(size.height, 19);
  EXPECT_EQ(encode_png(img), read_file_bytes(dir / "g.png"));
}

TEST(Png, CorruptInputThrows) {
  testing::TempDir dir;
  testing::write_text(dir / "bad.png", "definitely not a png");
  EXPECT_THROW(read_png(dir / "bad.png"), UnreadableImage);
  EXPECT_THROW(read_png_size(dir / "bad.png"), UnreadableImage);
  EXPECT_THROW(read_png_size(dir / "none.png"), UnreadableImage);
  const std::vector<std::uint8_t> junk = {0x89, 'P', 'N', 'G'};
  EXPECT_THROW(decode_png(junk), UnreadableImage);
}

TEST(Sha256, KnownVectors) {
  const std::string abc = "abc";
  EXPECT_EQ(sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

}  // namespace
}  // namespace uiinstruct
