// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uiinstruct/datagen.hpp"
#include "uiinstruct/model.hpp"
#include "uiinstruct/rng.hpp"

namespace uiinstruct::testing {

std::filesystem::path fixture(const std::string& relative);
std::filesystem::path prompt_dir();
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// The podcast screen (19 elements) and the settings screen (13 elements)
/// with their expected serializations.
Screen podcast_screen();
Screen settings_screen();
std::string podcast_expected();
std::string settings_expected();

/// Random screen with nested and overlapping boxes.
Screen random_screen(Rng& rng, const std::string& id, int width = 400, int height = 800, int max_elements = 24);

/// Random element; text and subtype are drawn from small vocabularies so
/// collisions happen.
UIElement random_element(Rng& rng, int ordinal, int width, int height);

UIElement element(ElementType type, std::optional<std::string> text, std::optional<std::string> subtype,
                  BoundingBox box, int ordinal = 0);

Sample make_sample(const std::string& screen_id, SampleKind kind, int turns = 1, const std::string& suffix = "");

}  // namespace uiinstruct::testing
