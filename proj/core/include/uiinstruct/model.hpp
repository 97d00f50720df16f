// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uiinstruct {

struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned box in source-screenshot pixels. (x1, y1) is the top-left
/// corner and (x2, y2) the bottom-right; both corners are inside the box.
class BoundingBox {
 public:
  BoundingBox() = default;
  /// Throws std::invalid_argument unless 0 <= x1 <= x2 and 0 <= y1 <= y2.
  BoundingBox(int x1, int y1, int x2, int y2);

  int x1() const noexcept { return x1_; }
  int y1() const noexcept { return y1_; }
  int x2() const noexcept { return x2_; }
  int y2() const noexcept { return y2_; }
  int width() const noexcept { return x2_ - x1_; }
  int height() const noexcept { return y2_ - y1_; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }

  /// Closed on all four edges.
  bool contains(Point p) const noexcept {
    return x1_ <= p.x && p.x <= x2_ && y1_ <= p.y && p.y <= y2_;
  }

  /// Squared distance from the box center to `p`, measured in half-pixel
  /// units so it stays integral: (x1 + x2 - 2px)^2 + (y1 + y2 - 2py)^2.
  std::int64_t doubled_center_distance_sq(Point p) const noexcept;

  /// Intersection with [0,width]x[0,height].
  BoundingBox clamped(int width, int height) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  int x1_ = 0;
  int y1_ = 0;
  int x2_ = 0;
  int y2_ = 0;
};

inline bool contains(const BoundingBox& box, Point p) noexcept { return box.contains(p); }

enum class ElementType {
  kButton,
  kCheckbox,
  kContainer,
  kDialog,
  kIcon,
  kPageControl,
  kPicture,
  kSegmentedControl,
  kSlider,
  kText,
  kTextField,
  kToggle,
  kTab,
};

inline constexpr std::size_t kElementTypeCount = 13;

/// The twelve categories offered as answers in the type benchmark. Tab is
/// serializable but not part of this set.
inline constexpr std::array<ElementType, 12> kBenchmarkTypes = {
    ElementType::kButton,      ElementType::kCheckbox,         ElementType::kContainer,
    ElementType::kDialog,      ElementType::kIcon,             ElementType::kPageControl,
    ElementType::kPicture,     ElementType::kSegmentedControl, ElementType::kSlider,
    ElementType::kText,        ElementType::kTextField,        ElementType::kToggle,
};

std::span<const ElementType> all_element_types() noexcept;

/// "page control"
std::string_view canonical_name(ElementType type) noexcept;
/// "Page Control"
std::string_view display_name(ElementType type) noexcept;

bool is_benchmark_type(ElementType type) noexcept;

/// Accepts the canonical or display name, case-insensitively. Returns
/// nullopt for anything else.
std::optional<ElementType> parse_element_type(std::string_view name) noexcept;

/// Looser mapping used for detector labels: also accepts '_' and '-' as
/// word separators ("text_field", "page-control") and a few common
/// detector aliases.
std::optional<ElementType> element_type_from_label(std::string_view label) noexcept;

struct UIElement {
  ElementType type = ElementType::kText;
  /// OCR text exactly as the detector delivered it. Empty strings are
  /// treated as absent.
  std::optional<std::string> text;
  /// Only meaningful for icons ("back", "more", "play").
  std::optional<std::string> icon_subtype;
  BoundingBox box;
  int ordinal = 0;
  /// Detector confidence when the source provided one.
  std::optional<double> confidence;

  bool has_text() const noexcept { return text.has_value() && !text->empty(); }

  friend bool operator==(const UIElement&, const UIElement&) = default;
};

/// A screenshot and its detected elements. Elements are kept sorted by
/// ordinal; the ordinals are exactly 0..n-1.
class Screen {
 public:
  Screen() = default;

  /// Validates ordinals, rejects icon subtypes on non-icons and clamps boxes
  /// that leave [0,width]x[0,height] (logging a warning). Throws
  /// std::invalid_argument on invariant violations.
  Screen(std::string screen_id, std::string image_ref, int width, int height,
         std::vector<UIElement> elements, std::optional<std::string> caption = std::nullopt);

  const std::string& screen_id() const noexcept { return screen_id_; }
  const std::string& image_ref() const noexcept { return image_ref_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<UIElement>& elements() const noexcept { return elements_; }
  const std::optional<std::string>& caption() const noexcept { return caption_; }
  /// Number of boxes clamped to the screen bounds during construction.
  int clamped_boxes() const noexcept { return clamped_boxes_; }

  Screen with_caption(std::string caption) const;

  friend bool operator==(const Screen&, const Screen&) = default;

 private:
  std::string screen_id_;
  std::string image_ref_;
  int width_ = 0;
  int height_ = 0;
  std::vector<UIElement> elements_;
  std::optional<std::string> caption_;
  int clamped_boxes_ = 0;
};

/// Two screens linked by a tap on the first one.
struct Transition {
  Screen from_screen;
  Screen to_screen;
  Point tap_point;
  std::optional<UIElement> tapped_element;

  bool resolved() const noexcept { return tapped_element.has_value(); }
};

/// The element with the smallest box containing `p`. Ties on area go to the
/// box whose center is closest to `p`, then to the lowest ordinal. Throws
/// NoContainingElement when nothing contains `p`.
const UIElement& smallest_containing_element(const Screen& screen, Point p);

/// Returns a copy of `t` with tapped_element resolved against from_screen.
/// Propagates NoContainingElement.
Transition resolve_transition(Transition t);

}  // namespace uiinstruct
