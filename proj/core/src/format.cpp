// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/format.hpp"

#include <charconv>

#include "uiinstruct/errors.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

constexpr std::string_view kLabelPrefix = "Label: ";
constexpr std::string_view kSubtypeOpen = " (Type: ";
constexpr std::string_view kTextClause = ", Text: ";
constexpr std::string_view kBoxClause = ", BoundingBox from (";

void append_box(std::string& out, const BoundingBox& box) {
  out.append(kBoxClause);
  out.append(std::to_string(box.x1())).append(", ").append(std::to_string(box.y1()));
  out.append(") to (");
  out.append(std::to_string(box.x2())).append(", ").append(std::to_string(box.y2()));
  out.push_back(')');
}

int expect_int(std::string_view& s, std::string_view line) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data()) {
    throw ParseFailure("malformed coordinate in element line: " + std::string(line));
  }
  s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
  return value;
}

void expect_literal(std::string_view& s, std::string_view literal, std::string_view line) {
  if (s.substr(0, literal.size()) != literal) {
    throw ParseFailure("expected '" + std::string(literal) + "' in element line: " + std::string(line));
  }
  s.remove_prefix(literal.size());
}

BoundingBox parse_box(std::string_view s, std::string_view line) {
  const int x1 = expect_int(s, line);
  expect_literal(s, ", ", line);
  const int y1 = expect_int(s, line);
  expect_literal(s, ") to (", line);
  const int x2 = expect_int(s, line);
  expect_literal(s, ", ", line);
  const int y2 = expect_int(s, line);
  expect_literal(s, ")", line);
  if (!s.empty()) throw ParseFailure("trailing characters in element line: " + std::string(line));
  try {
    return BoundingBox(x1, y1, x2, y2);
  } catch (const std::invalid_argument& e) {
    throw ParseFailure(std::string(e.what()) + ": " + std::string(line));
  }
}

}  // namespace

std::string format_element(const UIElement& element) {
  std::string out(kLabelPrefix);
  out.append(display_name(element.type));
  if (element.type == ElementType::kIcon && element.icon_subtype) {
    out.append(kSubtypeOpen).append(*element.icon_subtype).push_back(')');
  }
  if (element.has_text()) {
    out.append(kTextClause).append(*element.text);
  }
  append_box(out, element.box);
  return out;
}

std::string format_screen(const Screen& screen) {
  std::string out;
  for (const auto& element : screen.elements()) {
    if (!out.empty()) out.push_back('\n');
    out.append(format_element(element));
  }
  return out;
}

UIElement parse_element_line(std::string_view line) {
  if (line.substr(0, kLabelPrefix.size()) != kLabelPrefix) {
    throw ParseFailure("element line must start with 'Label: ': " + std::string(line));
  }
  const auto box_pos = line.rfind(kBoxClause);
  if (box_pos == std::string_view::npos || box_pos < kLabelPrefix.size()) {
    throw ParseFailure("element line lacks a BoundingBox clause: " + std::string(line));
  }

  UIElement element;
  element.box = parse_box(line.substr(box_pos + kBoxClause.size()), line);

  std::string_view head = line.substr(kLabelPrefix.size(), box_pos - kLabelPrefix.size());

  // Longest display name that ends at a clause boundary ("Text Field" beats "Text").
  std::optional<ElementType> type;
  std::size_t type_len = 0;
  for (ElementType candidate : all_element_types()) {
    const auto name = display_name(candidate);
    if (head.substr(0, name.size()) != name || name.size() <= type_len) continue;
    const auto rest = head.substr(name.size());
    if (rest.empty() || rest.starts_with(kSubtypeOpen) || rest.starts_with(kTextClause)) {
      type = candidate;
      type_len = name.size();
    }
  }
  if (!type) throw ParseFailure("unknown element label in line: " + std::string(line));
  element.type = *type;
  head.remove_prefix(type_len);

  if (head.starts_with(kSubtypeOpen)) {
    head.remove_prefix(kSubtypeOpen.size());
    std::size_t close = std::string_view::npos;
    if (head.ends_with(')') && head.find(kTextClause) == std::string_view::npos) {
      close = head.size() - 1;
    } else {
      const auto marker = head.find(std::string(")") + std::string(kTextClause));
      if (marker != std::string_view::npos) close = marker;
    }
    if (close == std::string_view::npos) {
      throw ParseFailure("unterminated icon subtype in line: " + std::string(line));
    }
    element.icon_subtype = std::string(head.substr(0, close));
    head.remove_prefix(close + 1);
  }

  if (head.starts_with(kTextClause)) {
    head.remove_prefix(kTextClause.size());
    if (head.empty()) throw ParseFailure("empty Text clause in line: " + std::string(line));
    element.text = std::string(head);
    head = {};
  }
  if (!head.empty()) throw ParseFailure("unexpected content in element line: " + std::string(line));
  return element;
}

std::string describe_element(const UIElement& element) {
  std::string out(display_name(element.type));
  if (element.type == ElementType::kIcon && element.icon_subtype) {
    out.append(kSubtypeOpen).append(*element.icon_subtype).push_back(')');
  }
  if (element.has_text()) {
    out.append(" with text \"").append(*element.text).push_back('"');
  }
  return out;
}

std::string describe_element_untyped(const UIElement& element) {
  std::string out = "the UI element";
  if (element.has_text()) {
    out.append(" with text \"").append(*element.text).append("\"");
  }
  const auto& b = element.box;
  out.append(" at BoundingBox from (")
      .append(std::to_string(b.x1()))
      .append(", ")
      .append(std::to_string(b.y1()))
      .append(") to (")
      .append(std::to_string(b.x2()))
      .append(", ")
      .append(std::to_string(b.y2()))
      .append(")");
  return out;
}

}  // namespace uiinstruct
