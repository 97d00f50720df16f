// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiinstruct/datagen.hpp"
#include "uiinstruct/preprocess.hpp"
#include "uiinstruct/rng.hpp"

namespace uiinstruct {

inline constexpr std::string_view kImageToken = "<image>";

struct RecordTurn {
  /// "human" or "assistant".
  std::string from;
  std::string value;

  friend bool operator==(const RecordTurn&, const RecordTurn&) = default;
};

struct TrainingRecord {
  std::string record_id;
  /// Preprocessed image path relative to the corpus directory once
  /// assembled; the source image before that.
  std::string image_ref;
  std::vector<RecordTurn> conversation;
  SampleKind kind = SampleKind::kConversation;
  std::string screen_id;
  std::optional<std::string> target_screen_id;
  Provenance provenance;

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

/// First user turn is "<image>\nQ1" or "Q1\n<image>" by a fair coin; later
/// turns carry plain questions and answers.
TrainingRecord sequence_sample(const Sample& sample, Rng& rng);

/// Throws ValidationError unless roles alternate human/assistant starting
/// with human and the only image token sits in the first human turn.
void validate_record(const TrainingRecord& record);

nlohmann::ordered_json record_to_json(const TrainingRecord& record);
TrainingRecord record_from_json(const nlohmann::json& j);

// Mix plan --------------------------------------------------------------------

enum class MixCategory {
  kConversation,
  kConcise,
  kDetailed,
  kGoalPlan,
  kAvailableActions,
  kTransition,
};

inline constexpr std::size_t kMixCategoryCount = 6;

std::string_view mix_category_name(MixCategory c) noexcept;
MixCategory mix_category_of(SampleKind kind) noexcept;

struct MixPlan {
  /// Indexed by MixCategory.
  std::array<int, kMixCategoryCount> ratios{224, 32, 32, 32, 32, 1};

  /// "224:32:32:32:32:1" in MixCategory order, or named entries such as
  /// "conversation=3,concise=1" (unnamed categories get 0).
  static MixPlan parse(std::string_view text);
  std::string to_string() const;

  /// Throws std::invalid_argument on a negative ratio or an all-zero plan.
  void validate() const;

  int ratio(MixCategory c) const { return ratios[static_cast<std::size_t>(c)]; }

  /// Per-kind targets for a corpus of `size` records (largest remainder;
  /// outcome_prediction takes the odd transition record).
  std::array<int, kAllSampleKinds.size()> targets(int size) const;
};

/// (screen_id, kind, normalized first question).
std::string dedup_key(const Sample& sample);

struct KindSelection {
  int available = 0;
  int duplicates = 0;
  int target = 0;
  int selected = 0;
};

struct Selection {
  std::vector<Sample> samples;
  std::array<KindSelection, kAllSampleKinds.size()> per_kind{};
};

/// Deduplicates, then draws each kind's target by seeded shuffle. A
/// transition kind short of samples borrows from its sibling. Throws
/// InsufficientSamples when a kind cannot meet its target and is not in
/// `waived`; waived kinds contribute what they have.
Selection select_mix(const std::vector<Sample>& samples, const MixPlan& plan, int size, std::uint64_t seed,
                     const std::vector<SampleKind>& waived = {});

/// Largest size the plan can fill from the deduplicated samples.
int max_feasible_size(const std::vector<Sample>& samples, const MixPlan& plan);

// Corpus ------------------------------------------------------------------------

struct AssemblyOptions {
  std::filesystem::path out_dir;
  /// 0 picks max_feasible_size().
  int size = 0;
  MixPlan plan;
  PreprocessSpec preprocess;
  std::uint64_t seed = 0;
  std::vector<SampleKind> waived;
  int concurrency = 1;
};

struct CorpusKindStats {
  KindSelection selection;
  KindStats generation;
};

struct CorpusStats {
  int size = 0;
  int records = 0;
  int images = 0;
  std::array<CorpusKindStats, kAllSampleKinds.size()> per_kind{};
  GenerationStats generation;

  const CorpusKindStats& of(SampleKind kind) const { return per_kind[static_cast<std::size_t>(kind)]; }
};

inline constexpr std::string_view kCorpusFileName = "corpus.jsonl";
inline constexpr std::string_view kImagesDirName = "images";
inline constexpr std::string_view kStatsJsonName = "stats.json";
inline constexpr std::string_view kStatsTableName = "stats.txt";

/// Selects, sequences and validates records, writes preprocessed images to
/// `<out>/images/<sha256>.png`, the corpus to `<out>/corpus.jsonl` sorted by
/// record id, and stats to `<out>/stats.json` and `<out>/stats.txt`.
CorpusStats assemble_corpus(const std::vector<Sample>& samples, const GenerationStats& generation,
                            const AssemblyOptions& options);

std::string render_stats_table(const CorpusStats& stats);
nlohmann::ordered_json stats_to_json(const CorpusStats& stats);

}  // namespace uiinstruct
