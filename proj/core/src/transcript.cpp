// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/transcript.hpp"

#include <optional>

#include "uiinstruct/errors.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

enum class Marker { kQuestion, kAnswer };

std::string_view strip_emphasis(std::string_view s) {
  while (s.starts_with("**") || s.starts_with("__")) s.remove_prefix(2);
  return s;
}

// Recognizes "Question:", "**Question:**", "**Question**:" and so on.
// On success returns the marker and leaves `rest` holding the text after it.
std::optional<Marker> match_marker(std::string_view line, std::string_view& rest) {
  auto s = strip_emphasis(text::trim(line));
  std::optional<Marker> marker;
  if (text::istarts_with(s, "question")) {
    marker = Marker::kQuestion;
    s.remove_prefix(8);
  } else if (text::istarts_with(s, "answer")) {
    marker = Marker::kAnswer;
    s.remove_prefix(6);
  } else {
    return std::nullopt;
  }
  s = strip_emphasis(s);
  if (!s.starts_with(':')) return std::nullopt;
  s.remove_prefix(1);
  s = strip_emphasis(s);
  rest = s;
  return marker;
}

std::string trimmed(const std::string& s) { return std::string(text::trim(s)); }

}  // namespace

std::vector<QAPair> parse_qa_transcript(std::string_view content) {
  std::vector<QAPair> pairs;
  enum class State { kPreamble, kQuestion, kAnswer } state = State::kPreamble;
  std::string question;
  std::string answer;

  auto flush = [&] {
    if (state == State::kAnswer) {
      QAPair pair{trimmed(question), trimmed(answer)};
      if (!pair.question.empty() && !pair.answer.empty()) pairs.push_back(std::move(pair));
    }
    question.clear();
    answer.clear();
  };

  for (auto line : text::split_lines(content)) {
    std::string_view rest;
    const auto marker = match_marker(line, rest);
    if (marker == Marker::kQuestion) {
      flush();
      state = State::kQuestion;
      question = std::string(rest);
    } else if (marker == Marker::kAnswer && state == State::kQuestion) {
      state = State::kAnswer;
      answer = std::string(rest);
    } else if (state == State::kQuestion) {
      question.push_back('\n');
      question.append(line);
    } else if (state == State::kAnswer) {
      answer.push_back('\n');
      answer.append(line);
    }
  }
  flush();

  if (pairs.empty()) throw ParseFailure("no complete Question/Answer pair in model output");
  return pairs;
}

std::string render_qa_transcript(const std::vector<QAPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out.append("Question: ").append(p.question).push_back('\n');
    out.append("Answer: ").append(p.answer).push_back('\n');
  }
  return out;
}

std::string parse_single_sentence(std::string_view content) {
  auto s = text::trim(content);
  auto strip_pair = [&](std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
      s.remove_prefix(open.size());
      s.remove_suffix(close.size());
      s = text::trim(s);
      return true;
    }
    return false;
  };
  strip_pair("\"", "\"") || strip_pair("'", "'") || strip_pair("\xE2\x80\x9C", "\xE2\x80\x9D");
  if (s.empty()) throw ParseFailure("empty single-sentence response");
  return std::string(s);
}

std::string parse_free_answer(std::string_view content) {
  auto s = text::trim(content);
  std::string_view rest;
  if (match_marker(s.substr(0, s.find('\n')), rest) == Marker::kAnswer) {
    s.remove_prefix(static_cast<std::size_t>(rest.data() - s.data()));
    s = text::trim(s);
  }
  if (s.empty()) throw ParseFailure("empty response");
  return std::string(s);
}

}  // namespace uiinstruct
