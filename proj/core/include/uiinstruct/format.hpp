// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "uiinstruct/model.hpp"

namespace uiinstruct {

/// One prompt line per element:
///   Label: <Type>[ (Type: <subtype>)][, Text: <text>], BoundingBox from (x1, y1) to (x2, y2)
std::string format_element(const UIElement& element);

/// Newline-joined format_element lines in ordinal order. Empty for a screen
/// without elements; no trailing newline.
std::string format_screen(const Screen& screen);

/// Inverse of format_element. The returned element has ordinal 0 and no
/// confidence. Throws ParseFailure on lines the formatter cannot produce.
UIElement parse_element_line(std::string_view line);

/// Short human-readable description used in benchmark probes, e.g.
/// `Button with text "Resume"` or `Icon (Type: back)`.
std::string describe_element(const UIElement& element);

/// Same as describe_element but without revealing the element type; the
/// box is included so the element can be located.
std::string describe_element_untyped(const UIElement& element);

}  // namespace uiinstruct
