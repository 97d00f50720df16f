// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace uiinstruct {

struct QAPair {
  std::string question;
  std::string answer;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Splits a model transcript into question/answer pairs.
///
/// A pair starts at a line beginning with `Question:` and its answer at a
/// line beginning with `Answer:` (case-insensitive; surrounding `**` or
/// `__` markers are stripped). Answers may span several lines and run until
/// the next `Question:` line; internal newlines are kept and the ends are
/// trimmed. Text before the first question and questions left without an
/// answer are ignored. Throws ParseFailure when no complete pair is found.
std::vector<QAPair> parse_qa_transcript(std::string_view content);

/// Canonical rendering: "Question: q\nAnswer: a\n" per pair.
std::string render_qa_transcript(const std::vector<QAPair>& pairs);

/// Trims whitespace and one level of surrounding quotes. Throws
/// ParseFailure when nothing is left.
std::string parse_single_sentence(std::string_view content);

/// Trims a free-form answer and drops an echoed leading `Answer:` marker.
/// Throws ParseFailure when nothing is left.
std::string parse_free_answer(std::string_view content);

}  // namespace uiinstruct
