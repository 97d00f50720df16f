// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uiinstruct/rng.hpp"

namespace uiinstruct {

struct ModelDescription {
  std::string screen_id;
  std::string image_ref;
  std::string description;
};

/// Two descriptions of one screen. Which model wrote which side is kept
/// server-side and never leaves through client_payload().
struct RatingPair {
  int pair_id = 0;
  std::string screen_id;
  std::string image_ref;
  std::string description_a;
  std::string description_b;
  std::string first_model;
  std::string second_model;
  /// True when description_a came from first_model.
  bool a_is_first = true;

  const std::string& model_of_a() const { return a_is_first ? first_model : second_model; }
  const std::string& model_of_b() const { return a_is_first ? second_model : first_model; }

  friend bool operator==(const RatingPair&, const RatingPair&) = default;
};

/// One pair per screen (ordered by screen id, ids from 1), sides assigned
/// by a coin flip per pair. Throws MissingDescription when a screen lacks a
/// description from either model or a description is blank.
std::vector<RatingPair> build_rating_pairs(const std::vector<ModelDescription>& first, const std::string& first_model,
                                           const std::vector<ModelDescription>& second,
                                           const std::string& second_model, Rng& rng);

/// Full record including attribution, for the server's pairs file.
nlohmann::ordered_json pair_to_json(const RatingPair& pair);
RatingPair pair_from_json(const nlohmann::json& j);
std::vector<RatingPair> load_pairs(const std::filesystem::path& path);
void save_pairs(const std::filesystem::path& path, const std::vector<RatingPair>& pairs);

/// What the rating client may see: id, image URL and the two texts.
nlohmann::ordered_json client_payload(const RatingPair& pair);

enum class Choice { kA, kB, kSame };

std::string_view choice_name(Choice c) noexcept;
/// "A", "B" or "same" (case-insensitive).
std::optional<Choice> parse_choice(std::string_view s) noexcept;

struct RatingVote {
  int pair_id = 0;
  std::string rater_id;
  Choice choice = Choice::kSame;
  std::string timestamp;

  friend bool operator==(const RatingVote&, const RatingVote&) = default;
};

nlohmann::ordered_json vote_to_json(const RatingVote& vote);
RatingVote vote_from_json(const nlohmann::json& j);

struct PreferenceCounts {
  int first = 0;
  int second = 0;
  int same = 0;

  int total() const noexcept { return first + second + same; }
  /// Percentages of total(); all 0 when there are no votes.
  double first_pct() const noexcept;
  double second_pct() const noexcept;
  double same_pct() const noexcept;
};

struct PreferenceReport {
  std::string first_model;
  std::string second_model;
  PreferenceCounts overall;
  std::map<std::string, PreferenceCounts> per_rater;
  /// Votes naming a pair id that does not exist.
  int unresolved = 0;
};

/// Resolves each (pair, rater) vote, the latest one winning, through the
/// pair's hidden attribution.
PreferenceReport tally_ratings(const std::vector<RatingPair>& pairs, const std::vector<RatingVote>& votes);

nlohmann::ordered_json to_json(const PreferenceReport& report);

/// Append-only vote log. Each vote is fsync'ed before record() returns; the
/// latest vote per (pair, rater) is the effective one and older ones stay
/// in the audit trail.
class RatingStore {
 public:
  explicit RatingStore(std::filesystem::path path);
  ~RatingStore();
  RatingStore(const RatingStore&) = delete;
  RatingStore& operator=(const RatingStore&) = delete;

  void record(const RatingVote& vote);

  /// Effective votes ordered by (pair_id, rater_id).
  std::vector<RatingVote> votes() const;
  /// Every vote ever recorded, in arrival order.
  std::vector<RatingVote> audit() const;
  std::set<int> rated_by(std::string_view rater) const;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  mutable std::mutex mutex_;
  std::vector<RatingVote> audit_;
  std::map<std::pair<int, std::string>, RatingVote> effective_;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// The rating HTTP API. Handlers are callable directly (tests) or served
/// over HTTP:
///   GET  /api/next?rater=ID        next unrated pair for a rater
///   GET  /api/pairs/{id}           pair payload without attribution
///   GET  /api/pairs/{id}/image     the screenshot
///   POST /api/votes                {"pair_id", "rater_id", "choice"}
///   GET  /api/progress?rater=ID    {"rater_id", "completed", "total"}
///   GET  /api/admin/tally          preference report
/// Anything else is looked up under the static directory when one is set.
class RatingService {
 public:
  /// Relative image paths in `pairs` resolve against `image_root`.
  RatingService(std::vector<RatingPair> pairs, RatingStore& store, std::filesystem::path image_root,
                std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~RatingService();

  ApiResponse next(std::string_view rater) const;
  ApiResponse pair(int pair_id) const;
  ApiResponse image(int pair_id) const;
  ApiResponse vote(std::string_view body);
  ApiResponse progress(std::string_view rater) const;
  ApiResponse tally() const;

  /// Binds to host:port (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();

 private:
  struct Server;

  nlohmann::ordered_json progress_json(std::string_view rater) const;

  std::vector<RatingPair> pairs_;
  std::map<int, std::size_t> by_id_;
  RatingStore& store_;
  std::filesystem::path image_root_;
  std::optional<std::filesystem::path> static_dir_;
  std::unique_ptr<Server> server_;
};

}  // namespace uiinstruct
