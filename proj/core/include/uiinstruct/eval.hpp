// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiinstruct/llm.hpp"
#include "uiinstruct/model.hpp"
#include "uiinstruct/rng.hpp"

namespace uiinstruct {

// Matching check --------------------------------------------------------------

/// Same type, and either both icon subtypes present and equal or both texts
/// present and equal after trimming and case folding. A probe carrying
/// neither text nor subtype matches any element of its type.
bool elements_match(const UIElement& probe, const UIElement& candidate);
bool screen_has_match(const Screen& screen, const UIElement& probe);

// Benchmarks ------------------------------------------------------------------

enum class ExistenceLabel { kPositive, kNegative };

struct ExistenceItem {
  std::string item_id;
  std::string screen_id;
  std::string image_ref;
  /// Natural-language description of the probe, as put to the model.
  std::string probe;
  UIElement probe_element;
  ExistenceLabel label = ExistenceLabel::kPositive;
  /// Screen the probe element was taken from.
  std::string source_screen_id;

  friend bool operator==(const ExistenceItem&, const ExistenceItem&) = default;
};

struct TypeItem {
  std::string item_id;
  std::string screen_id;
  std::string image_ref;
  /// Probe description with the type left out.
  std::string probe;
  UIElement probe_element;
  /// A permutation of kBenchmarkTypes.
  std::vector<ElementType> options;
  ElementType answer = ElementType::kButton;

  friend bool operator==(const TypeItem&, const TypeItem&) = default;
};

struct ExistenceBenchmarkOptions {
  int per_screen = 5;
  /// Candidate draws allowed per wanted negative before giving up.
  int max_draws_per_negative = 200;
};

/// Per screen: `per_screen` positives drawn without replacement from its
/// elements, and up to `per_screen` negatives drawn from other screens and
/// rejected while they match anything on the probed screen. Screens with
/// fewer than `per_screen` elements are skipped. Throws CorpusTooSmall for
/// fewer than two screens or when no screen qualifies.
std::vector<ExistenceItem> build_existence_benchmark(const std::vector<Screen>& screens, Rng& rng,
                                                     const ExistenceBenchmarkOptions& options = {});

/// Up to `per_screen` elements per screen whose type is in the answer set,
/// each with its own shuffled option list. Throws CorpusTooSmall when no
/// item can be built.
std::vector<TypeItem> build_type_benchmark(const std::vector<Screen>& screens, Rng& rng, int per_screen = 5);

inline constexpr std::string_view kDefaultExistenceTemplate =
    "Is there a {element} in this UI screen? Answer yes or no.";
inline constexpr std::string_view kDefaultTypeTemplate =
    "What type of UI element is {element}? Choose exactly one of: {options}.";

/// Replaces {element} (and {options} for type items).
std::string existence_question(const ExistenceItem& item, std::string_view tmpl = kDefaultExistenceTemplate);
std::string type_question(const TypeItem& item, std::string_view tmpl = kDefaultTypeTemplate);

nlohmann::ordered_json to_json(const ExistenceItem& item);
nlohmann::ordered_json to_json(const TypeItem& item);
ExistenceItem existence_item_from_json(const nlohmann::json& j);
TypeItem type_item_from_json(const nlohmann::json& j);

// Judges ----------------------------------------------------------------------

/// yes/no from a free-text reply: whole-word, case-insensitive. nullopt when
/// neither or both keywords occur.
std::optional<bool> judge_yes_no(std::string_view reply);

/// The single element type named in `reply` (display or canonical name,
/// longest match wins so "Text Field" is not read as "Text"). nullopt when
/// none or several distinct types are named.
std::optional<ElementType> judge_type(std::string_view reply);

// Metrics ---------------------------------------------------------------------

struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct TypeTally {
  int correct = 0;
  int total = 0;

  double accuracy() const noexcept { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct MetricsReport {
  Confusion confusion;
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  int items = 0;
  int unparseable = 0;
  /// Type benchmark only, keyed by the true type.
  std::map<ElementType, TypeTally> per_type;
};

/// Fills accuracy, precision, recall and F1 from the counts; undefined
/// ratios are 0.
MetricsReport metrics_from_confusion(const Confusion& confusion);

nlohmann::ordered_json to_json(const MetricsReport& report);

// Model clients ---------------------------------------------------------------

struct VisionQuery {
  std::string image_ref;
  std::string question;
  /// Stable id for logging and mock lookup ("existence/<item_id>").
  std::string tag;
};

/// A vision-language model endpoint. ask() throws EndpointUnavailable when
/// the model cannot be reached after retries.
class VisionModelClient {
 public:
  virtual ~VisionModelClient() = default;
  virtual std::string ask(const VisionQuery& query) = 0;
  virtual std::string id() const = 0;
};

/// Answers from a callable; used for stubs.
class FunctionVisionClient : public VisionModelClient {
 public:
  using Fn = std::function<std::string(const VisionQuery&)>;
  FunctionVisionClient(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  std::string ask(const VisionQuery& query) override { return fn_(query); }
  std::string id() const override { return id_; }

 private:
  std::string id_;
  Fn fn_;
};

/// Routes queries through a ScriptedBackend keyed by the query tag.
class ScriptedVisionClient : public VisionModelClient {
 public:
  explicit ScriptedVisionClient(std::shared_ptr<ScriptedBackend> backend);
  std::string ask(const VisionQuery& query) override;
  std::string id() const override { return backend_->id(); }

 private:
  std::shared_ptr<ScriptedBackend> backend_;
};

/// Chat-completion endpoint accepting an image part as a base64 data URL.
class RemoteVisionClient : public VisionModelClient {
 public:
  struct Config {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
  };

  explicit RemoteVisionClient(Config config);
  std::string ask(const VisionQuery& query) override;
  std::string id() const override;

  /// Request body for `query` given the PNG bytes (exposed for tests).
  std::string request_body(const VisionQuery& query, std::string_view png_base64) const;

  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  Config config_;
  RateLimiter limiter_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

/// "mock:<script>" or "openai:<url>#<model>".
std::shared_ptr<VisionModelClient> make_vision_client(const std::string& spec);

std::string base64_encode(std::span<const std::uint8_t> bytes);

// Running ---------------------------------------------------------------------

struct ItemOutcome {
  std::string item_id;
  std::string reply;
  /// Judge verdict rendered as text ("yes", "no", a type name) or empty when
  /// unparseable.
  std::string judged;
  bool correct = false;
};

struct BenchmarkRunOptions {
  int concurrency = 4;
  std::string question_template;
  /// Per-item outcomes are written here (JSONL, sorted by item id), also
  /// when the run aborts.
  std::optional<std::filesystem::path> results_path;
};

/// Queries every item once. Unparseable replies count as wrong: a false
/// negative for positive items, a false positive for negative ones. Throws
/// EndpointUnavailable after saving the outcomes gathered so far.
MetricsReport run_existence_benchmark(const std::vector<ExistenceItem>& items, VisionModelClient& client,
                                      const BenchmarkRunOptions& options = {},
                                      std::vector<ItemOutcome>* outcomes = nullptr);
MetricsReport run_type_benchmark(const std::vector<TypeItem>& items, VisionModelClient& client,
                                 const BenchmarkRunOptions& options = {}, std::vector<ItemOutcome>* outcomes = nullptr);

}  // namespace uiinstruct
