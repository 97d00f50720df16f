// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uiinstruct/model.hpp"

namespace uiinstruct {

enum class DetectionSourceKind {
  /// locator: directory holding `<screen_id>.detections` files.
  kAnnotationFile,
  /// locator: shell command template; `{image}` is replaced by the quoted
  /// image path and the annotation records are read from stdout.
  kExternalCommand,
  /// locator: URL that accepts a POST of the image bytes and answers with
  /// annotation records.
  kHttpEndpoint,
};

struct DetectionSource {
  DetectionSourceKind kind = DetectionSourceKind::kAnnotationFile;
  std::string locator;
  std::chrono::milliseconds timeout{30'000};

  /// Throws std::invalid_argument on an empty locator or non-positive timeout.
  void validate() const;

  /// Parses "annotation:<dir>", "command:<template>" or "http:<url>".
  /// A bare path is treated as an annotation directory.
  static DetectionSource parse(std::string_view spec);
};

/// One record of the annotation schema:
///   {"label": "button", "box": [x1, y1, x2, y2], "text": "...",
///    "iconType": "back", "confidence": 0.93}
struct RawDetection {
  std::string label;
  std::optional<double> confidence;
  std::array<double, 4> box{};
  std::optional<std::string> text;
  std::optional<std::string> icon_subtype;
};

/// Parses line-delimited annotation records. Blank lines are skipped.
/// Throws MalformedDetection on any schema violation.
std::vector<RawDetection> parse_detections(std::string_view payload);

/// Serializes records in the same schema parse_detections reads.
std::string serialize_detections(const std::vector<RawDetection>& records);

struct LoadOptions {
  /// Screen size override. When unset the PNG header of the image is read.
  std::optional<int> width;
  std::optional<int> height;
};

/// Turns detector output into Screens. One instance may serve many
/// concurrent load_screen calls; the only shared state is the warning
/// counter.
class DetectionLoader {
 public:
  explicit DetectionLoader(DetectionSource source);

  const DetectionSource& source() const noexcept { return source_; }

  /// Elements keep the source's emission order. Labels that map to no
  /// ElementType are dropped and counted. Throws SourceUnavailable or
  /// MalformedDetection; both concern this screen only.
  Screen load_screen(const std::filesystem::path& image_ref, const std::string& screen_id,
                     const LoadOptions& options = {}) const;

  /// Builds a Screen from already-fetched records.
  Screen to_screen(const std::vector<RawDetection>& records, const std::string& image_ref,
                   const std::string& screen_id, int width, int height) const;

  std::size_t dropped_labels() const noexcept { return dropped_labels_.load(); }

 private:
  std::string fetch(const std::filesystem::path& image_ref, const std::string& screen_id) const;

  DetectionSource source_;
  mutable std::atomic<std::size_t> dropped_labels_{0};
};

/// Removes elements whose confidence is below `threshold` and re-densifies
/// ordinals. Elements without a confidence are kept. Throws
/// std::invalid_argument unless 0 <= threshold <= 1.
Screen filter_by_confidence(const Screen& screen, double threshold);

inline constexpr double kDefaultConfidenceThreshold = 0.5;

}  // namespace uiinstruct
