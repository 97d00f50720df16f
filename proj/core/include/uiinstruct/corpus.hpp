// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "uiinstruct/assembler.hpp"
#include "uiinstruct/datagen.hpp"
#include "uiinstruct/detector.hpp"
#include "uiinstruct/llm.hpp"

namespace uiinstruct {

inline constexpr std::string_view kTransitionsFileName = "transitions.jsonl";

/// Parses `{"from": id, "to": id, "tap": [x, y]}` lines. Throws
/// ValidationError on a malformed line.
std::vector<TransitionSpec> parse_transitions(std::string_view jsonl);

struct CorpusInput {
  /// Ordered by screen id.
  std::vector<Screen> screens;
  std::vector<TransitionSpec> transitions;
  /// Screens whose detections could not be loaded.
  std::vector<std::string> failed;
};

/// Reads every `<id>.png` in `dir` through `loader`, drops elements below
/// `threshold` and skips ids in `exclude`. Transitions come from
/// `<dir>/transitions.jsonl` when present.
CorpusInput load_corpus_dir(const std::filesystem::path& dir, const DetectionLoader& loader, double threshold,
                            const std::set<std::string>& exclude = {}, int concurrency = 1);

/// One screen id per non-blank line.
std::set<std::string> read_id_list(const std::filesystem::path& path);

/// SOURCE_DATE_EPOCH when set, the Unix epoch for deterministic backends,
/// otherwise the current time; ISO 8601 UTC.
std::string provenance_timestamp(const ChatBackend& backend);

struct GenerateOptions {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  std::filesystem::path prompt_dir;
  /// Defaults to annotation files inside corpus_dir.
  std::optional<DetectionSource> detector;
  double threshold = kDefaultConfidenceThreshold;
  std::uint64_t seed = 0;
  int size = 0;
  MixPlan mix;
  PreprocessSpec preprocess;
  std::vector<SampleKind> waived;
  std::set<std::string> holdout;
  int concurrency = 1;
  RetryPolicy retry;
  std::optional<std::filesystem::path> audit_log;
};

/// Loads the corpus, generates samples through `backend` and assembles the
/// training corpus into options.out_dir.
CorpusStats run_generate(const GenerateOptions& options, std::shared_ptr<ChatBackend> backend);

}  // namespace uiinstruct
