// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/model.hpp"

#include <algorithm>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "uiinstruct/errors.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

struct TypeNames {
  ElementType type;
  std::string_view canonical;
  std::string_view display;
};

constexpr std::array<TypeNames, kElementTypeCount> kTypeNames = {{
    {ElementType::kButton, "button", "Button"},
    {ElementType::kCheckbox, "checkbox", "Checkbox"},
    {ElementType::kContainer, "container", "Container"},
    {ElementType::kDialog, "dialog", "Dialog"},
    {ElementType::kIcon, "icon", "Icon"},
    {ElementType::kPageControl, "page control", "Page Control"},
    {ElementType::kPicture, "picture", "Picture"},
    {ElementType::kSegmentedControl, "segmented control", "Segmented Control"},
    {ElementType::kSlider, "slider", "Slider"},
    {ElementType::kText, "text", "Text"},
    {ElementType::kTextField, "text field", "Text Field"},
    {ElementType::kToggle, "toggle", "Toggle"},
    {ElementType::kTab, "tab", "Tab"},
}};

constexpr std::array<ElementType, kElementTypeCount> kAllTypes = [] {
  std::array<ElementType, kElementTypeCount> out{};
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) out[i] = kTypeNames[i].type;
  return out;
}();

const TypeNames& names_of(ElementType type) noexcept {
  return kTypeNames[static_cast<std::size_t>(type)];
}

}  // namespace

BoundingBox::BoundingBox(int x1, int y1, int x2, int y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (x1 < 0 || y1 < 0 || x2 < 0 || y2 < 0) {
    throw std::invalid_argument("bounding box coordinates must be non-negative");
  }
  if (x1 > x2 || y1 > y2) {
    throw std::invalid_argument("bounding box corners out of order");
  }
}

std::int64_t BoundingBox::doubled_center_distance_sq(Point p) const noexcept {
  const std::int64_t dx = static_cast<std::int64_t>(x1_) + x2_ - 2LL * p.x;
  const std::int64_t dy = static_cast<std::int64_t>(y1_) + y2_ - 2LL * p.y;
  return dx * dx + dy * dy;
}

BoundingBox BoundingBox::clamped(int width, int height) const {
  auto clamp_to = [](int v, int hi) { return std::clamp(v, 0, std::max(hi, 0)); };
  return BoundingBox(clamp_to(x1_, width), clamp_to(y1_, height), clamp_to(x2_, width),
                     clamp_to(y2_, height));
}

std::span<const ElementType> all_element_types() noexcept { return kAllTypes; }

std::string_view canonical_name(ElementType type) noexcept { return names_of(type).canonical; }

std::string_view display_name(ElementType type) noexcept { return names_of(type).display; }

bool is_benchmark_type(ElementType type) noexcept {
  return std::find(kBenchmarkTypes.begin(), kBenchmarkTypes.end(), type) != kBenchmarkTypes.end();
}

std::optional<ElementType> parse_element_type(std::string_view name) noexcept {
  for (const auto& entry : kTypeNames) {
    if (text::iequals(name, entry.canonical)) return entry.type;
  }
  return std::nullopt;
}

std::optional<ElementType> element_type_from_label(std::string_view label) noexcept {
  std::string folded;
  bool pending_space = false;
  for (char c : text::trim(label)) {
    if (c == '_' || c == '-' || c == ' ') {
      pending_space = !folded.empty();
      continue;
    }
    if (pending_space) folded.push_back(' ');
    pending_space = false;
    folded.push_back(c);
  }
  if (auto direct = parse_element_type(folded)) return direct;

  struct Alias {
    std::string_view name;
    ElementType type;
  };
  static constexpr std::array<Alias, 9> kAliases = {{
      {"textfield", ElementType::kTextField},
      {"text input", ElementType::kTextField},
      {"image", ElementType::kPicture},
      {"switch", ElementType::kToggle},
      {"check box", ElementType::kCheckbox},
      {"pagecontrol", ElementType::kPageControl},
      {"segmentedcontrol", ElementType::kSegmentedControl},
      {"tab bar item", ElementType::kTab},
      {"label", ElementType::kText},
  }};
  for (const auto& alias : kAliases) {
    if (text::iequals(folded, alias.name)) return alias.type;
  }
  return std::nullopt;
}

Screen::Screen(std::string screen_id, std::string image_ref, int width, int height,
               std::vector<UIElement> elements, std::optional<std::string> caption)
    : screen_id_(std::move(screen_id)),
      image_ref_(std::move(image_ref)),
      width_(width),
      height_(height),
      elements_(std::move(elements)),
      caption_(std::move(caption)) {
  if (screen_id_.empty()) throw std::invalid_argument("screen_id must not be empty");
  if (width_ <= 0 || height_ <= 0) {
    throw std::invalid_argument("screen " + screen_id_ + ": width and height must be positive");
  }
  std::sort(elements_.begin(), elements_.end(),
            [](const UIElement& a, const UIElement& b) { return a.ordinal < b.ordinal; });
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    auto& e = elements_[i];
    if (e.ordinal != static_cast<int>(i)) {
      throw std::invalid_argument("screen " + screen_id_ + ": element ordinals must be 0..n-1");
    }
    if (e.icon_subtype && e.type != ElementType::kIcon) {
      throw std::invalid_argument("screen " + screen_id_ + ": icon subtype on a non-icon element");
    }
    if (e.text && e.text->empty()) e.text.reset();
    auto clamped = e.box.clamped(width_, height_);
    if (clamped != e.box) {
      ++clamped_boxes_;
      e.box = clamped;
    }
  }
  if (clamped_boxes_ > 0) {
    spdlog::warn("screen {}: clamped {} box(es) to {}x{}", screen_id_, clamped_boxes_, width_, height_);
  }
}

Screen Screen::with_caption(std::string caption) const {
  Screen copy = *this;
  copy.caption_ = std::move(caption);
  return copy;
}

const UIElement& smallest_containing_element(const Screen& screen, Point p) {
  const UIElement* best = nullptr;
  std::int64_t best_area = 0;
  std::int64_t best_distance = 0;
  for (const auto& e : screen.elements()) {
    if (!e.box.contains(p)) continue;
    const auto area = e.box.area();
    const auto distance = e.box.doubled_center_distance_sq(p);
    // Elements are visited in ordinal order, so strict comparisons keep the
    // lowest ordinal on a full tie.
    if (best == nullptr || area < best_area || (area == best_area && distance < best_distance)) {
      best = &e;
      best_area = area;
      best_distance = distance;
    }
  }
  if (best == nullptr) {
    throw NoContainingElement("screen " + screen.screen_id() + ": no element contains tap (" +
                              std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
  }
  return *best;
}

Transition resolve_transition(Transition t) {
  t.tapped_element = smallest_containing_element(t.from_screen, t.tap_point);
  return t;
}

}  // namespace uiinstruct
