// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uiinstruct/llm.hpp"
#include "uiinstruct/model.hpp"
#include "uiinstruct/rng.hpp"
#include "uiinstruct/transcript.hpp"

namespace uiinstruct {

enum class SampleKind {
  kConversation,
  kConciseDescription,
  kDetailedDescription,
  kAvailableActions,
  kOutcomePrediction,
  kElementSelection,
  kGoalPlan,
};

inline constexpr std::array<SampleKind, 7> kAllSampleKinds = {
    SampleKind::kConversation,     SampleKind::kConciseDescription, SampleKind::kDetailedDescription,
    SampleKind::kAvailableActions, SampleKind::kOutcomePrediction,  SampleKind::kElementSelection,
    SampleKind::kGoalPlan,
};

/// "conversation", "concise_description", ...
std::string_view sample_kind_name(SampleKind kind) noexcept;
std::optional<SampleKind> parse_sample_kind(std::string_view name) noexcept;

struct GoldenExample {
  /// Screen context block (formatted boxes and caption) the example shows.
  std::string input;
  /// Output the model is expected to imitate.
  std::string output;

  friend bool operator==(const GoldenExample&, const GoldenExample&) = default;
};

/// System message, few-shot examples and question pool for one generator.
///
/// File format (UTF-8): a `[section]` header line starts each section and
/// its body runs to the next header. Sections: system, example-1-input,
/// example-1-output, example-2-input, example-2-output, question-pool (one
/// question per non-blank line). Lines starting with `#` before the first
/// header are comments.
struct PromptAsset {
  std::string name;
  /// Content hash of the asset text; recorded in sample provenance.
  std::string version;
  std::string system_message;
  std::vector<GoldenExample> golden_examples;
  std::vector<std::string> question_pool;

  static PromptAsset parse(std::string_view name, std::string_view content);
  static PromptAsset load(const std::filesystem::path& path);

  std::string provenance() const { return name + "@" + version; }
};

/// The assets a full generation run needs, one file per generator named
/// `<kind>.prompt` in a directory.
struct PromptAssets {
  PromptAsset conversation;
  PromptAsset detailed_description;
  PromptAsset available_actions;
  PromptAsset outcome_prediction;
  PromptAsset element_selection;
  PromptAsset goal_plan;

  /// Loads and validates every asset (few-shot ones need exactly two golden
  /// examples, detailed_description needs a non-empty question pool).
  static PromptAssets load(const std::filesystem::path& dir);
  void validate() const;
};

struct Provenance {
  std::string backend_id;
  std::string prompt_asset;
  std::string timestamp;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Sample {
  std::string sample_id;
  SampleKind kind = SampleKind::kConversation;
  std::string image_ref;
  std::string screen_id;
  /// Set for samples derived from a transition.
  std::optional<std::string> target_screen_id;
  std::vector<QAPair> turns;
  Provenance provenance;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Throws std::invalid_argument unless turns are non-empty and
/// non-conversation samples have exactly one turn.
void validate_sample(const Sample& sample);

// Prompt text -----------------------------------------------------------------

inline constexpr std::string_view kCaptionInstruction =
    "Write a single-sentence usage description for this UI screen.";
inline constexpr std::string_view kAvailableActionsQuestion = "What actions can be performed on this UI?";
inline constexpr std::string_view kQaFormatReminder =
    "Reminder: format every pair exactly as two lines, one starting with \"Question:\" and the next "
    "starting with \"Answer:\".";

/// "Given the UI screen <formatted boxes>. Write a single-sentence usage
/// description for this UI screen."
std::string caption_prompt(const Screen& screen);

/// Formatted boxes followed by the caption; the shape golden-example inputs
/// use. Throws PreconditionViolation when the screen has no caption.
std::string screen_context(const Screen& screen);

/// System message, golden examples as alternating user/assistant turns,
/// then `target_input` as the final user turn.
ChatRequest build_few_shot_request(const PromptAsset& asset, std::string target_input, std::string tag,
                                   double temperature);

/// True when `answer` names the element by its text, one of its
/// comma-separated text fragments, its icon subtype or its type.
bool answer_mentions_element(std::string_view answer, const UIElement& element);

std::string transition_key(const Transition& t);

// Generators ------------------------------------------------------------------

struct KindCounters {
  std::atomic<int> generated{0};
  std::atomic<int> dropped{0};
  std::atomic<int> parse_failures{0};
  std::atomic<int> guard_rejections{0};
  std::atomic<int> skipped{0};
};

/// Assembles prompts, queries the gateway and parses replies into Samples.
/// A parse failure triggers one re-prompt carrying a format reminder; a
/// second failure drops the sample (DroppedSample). Safe to share across
/// threads.
class SampleGenerator {
 public:
  SampleGenerator(LlmGateway& gateway, std::string timestamp);

  /// Zero-shot caption request at temperature 0. Throws
  /// PreconditionViolation for a screen without elements; propagates
  /// BackendExhausted, BackendRefused and ParseFailure.
  std::string generate_caption(const Screen& screen);

  /// The caption packaged as a single question/answer turn.
  Sample concise_description(const Screen& captioned);

  Sample generate_conversation(const Screen& screen, const PromptAsset& asset);
  Sample generate_detailed_description(const Screen& screen, const PromptAsset& asset, Rng& rng);
  Sample generate_available_actions(const Screen& screen, const PromptAsset& asset);
  Sample generate_outcome_prediction(const Transition& transition, const PromptAsset& asset);
  Sample generate_element_selection(const Transition& transition, const PromptAsset& asset);
  Sample generate_goal_plan(const Screen& screen, const PromptAsset& asset);

  const KindCounters& counters(SampleKind kind) const { return counters_[static_cast<std::size_t>(kind)]; }
  KindCounters& counters(SampleKind kind) { return counters_[static_cast<std::size_t>(kind)]; }
  int caption_failures() const noexcept { return caption_failures_.load(); }

 private:
  template <typename Parse>
  auto query_with_reprompt(ChatRequest request, SampleKind kind, Parse parse, std::string_view reminder)
      -> decltype(parse(std::string{}));

  Sample make_sample(SampleKind kind, const Screen& screen, std::string id, std::vector<QAPair> turns,
                     std::string asset);

  LlmGateway& gateway_;
  std::string timestamp_;
  std::array<KindCounters, kAllSampleKinds.size()> counters_;
  std::atomic<int> caption_failures_{0};
};

// Pipeline --------------------------------------------------------------------

/// A recorded tap on `from` that led to `to`.
struct TransitionSpec {
  std::string from;
  std::string to;
  Point tap;
};

struct GenerationOptions {
  std::uint64_t seed = 0;
  int concurrency = 1;
  std::vector<SampleKind> kinds{kAllSampleKinds.begin(), kAllSampleKinds.end()};
  std::string timestamp = "1970-01-01T00:00:00Z";
};

struct KindStats {
  int generated = 0;
  int dropped = 0;
  int parse_failures = 0;
  int guard_rejections = 0;
  int skipped = 0;
};

struct GenerationStats {
  std::array<KindStats, kAllSampleKinds.size()> per_kind{};
  int screens = 0;
  int screens_without_elements = 0;
  int caption_failures = 0;
  int unresolved_taps = 0;
  int unknown_transition_screens = 0;

  const KindStats& of(SampleKind kind) const { return per_kind[static_cast<std::size_t>(kind)]; }
};

struct GenerationResult {
  /// Sorted by sample_id.
  std::vector<Sample> samples;
  /// Input screens with captions filled in where generation succeeded.
  std::vector<Screen> screens;
  GenerationStats stats;
};

/// Captions every screen, then runs the requested generators over screens
/// and transitions. Output does not depend on `concurrency`.
GenerationResult run_generation(const std::vector<Screen>& screens, const std::vector<TransitionSpec>& transitions,
                                const PromptAssets& assets, LlmGateway& gateway, const GenerationOptions& options);

}  // namespace uiinstruct
