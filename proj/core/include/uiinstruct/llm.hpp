// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace uiinstruct {

enum class Role { kUser, kAssistant };

std::string_view role_name(Role role) noexcept;

struct ChatTurn {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct ChatRequest {
  std::string system_message;
  std::vector<ChatTurn> turns;
  double temperature = 0.7;
  int max_tokens = 1024;
  /// Stable identifier used for logging, auditing and mock lookup.
  std::string request_tag;

  /// Throws std::invalid_argument: turns empty, last turn not from the
  /// user, negative temperature or non-positive max_tokens.
  void validate() const;

  /// Stable FNV-1a fingerprint over the system message and turns.
  std::string fingerprint() const;
};

struct ChatResponse {
  std::string content;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
};

inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kCaptionTemperature = 0.0;

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  /// 0 disables the corresponding limit.
  int max_in_flight = 4;
  int max_requests_per_minute = 0;

  void validate() const;
  /// Delay before attempt `attempt` (2-based: the first retry).
  std::chrono::milliseconds backoff_before(int attempt) const;
};

/// A chat-completion provider. send() raises TransientBackendError for
/// retryable failures and BackendRefused for permanent ones.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string content_for(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
  /// True when responses depend only on the request (scripted mocks).
  virtual bool deterministic() const { return false; }
};

/// Caps concurrent requests and requests per sliding 60 s window.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  RateLimiter(int max_in_flight, int max_per_minute);

  void acquire();
  void release();

  int in_flight() const;
  int peak_in_flight() const;

  /// RAII wrapper around acquire/release.
  class Permit {
   public:
    explicit Permit(RateLimiter& limiter) : limiter_(&limiter) { limiter_->acquire(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { limiter_->release(); }

   private:
    RateLimiter* limiter_;
  };

 private:
  int max_in_flight_;
  int max_per_minute_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::deque<Clock::time_point> window_;
};

struct AuditEntry {
  std::string request_tag;
  int attempt = 0;
  std::string backend_id;
  std::string system_message;
  std::vector<ChatTurn> turns;
  double temperature = 0;
  /// "ok", "transient" or "refused".
  std::string outcome;
  /// Response content on success, error message otherwise.
  std::string detail;
  std::int64_t latency_ms = 0;
};

/// Retrying, rate-limited front end over a ChatBackend. Every attempt is
/// appended to the audit log. Safe for concurrent callers.
class LlmGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LlmGateway(std::shared_ptr<ChatBackend> backend, RetryPolicy policy);

  /// Throws BackendExhausted once max_attempts transient failures have been
  /// seen and BackendRefused immediately on a non-retryable failure.
  ChatResponse complete(const ChatRequest& request);

  const ChatBackend& backend() const noexcept { return *backend_; }
  const RetryPolicy& policy() const noexcept { return policy_; }
  const RateLimiter& limiter() const noexcept { return limiter_; }

  /// Replaces the real sleep used between retries (tests use a no-op).
  void set_sleeper(Sleeper sleeper);

  /// Mirrors every audit entry to a line-delimited JSON file.
  void open_audit_file(const std::filesystem::path& path);

  std::vector<AuditEntry> audit_log() const;
  std::vector<AuditEntry> audit_for(const std::string& request_tag) const;
  int attempts_for(const std::string& request_tag) const;

 private:
  void record(AuditEntry entry);

  std::shared_ptr<ChatBackend> backend_;
  RetryPolicy policy_;
  RateLimiter limiter_;
  Sleeper sleeper_;
  mutable std::mutex audit_mutex_;
  std::vector<AuditEntry> audit_;
  std::ofstream audit_file_;
};

/// Mock backend driven by a script. Lookup order for a request: exact
/// request_tag, then content fingerprint, then the longest matching tag
/// prefix. A rule holding several responses serves them in order and then
/// repeats the last one. Unmatched requests are refused.
///
/// Script file: one JSON object per line with "response" (string) or
/// "responses" (array) and exactly one of "tag", "fingerprint", "prefix".
/// Optional "fail": N makes the first N calls for that rule fail
/// transiently.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::string id = "scripted-mock");

  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

  void script_tag(const std::string& tag, std::vector<std::string> responses, int failures = 0);
  void script_fingerprint(const std::string& fingerprint, std::vector<std::string> responses);
  void script_prefix(const std::string& prefix, std::vector<std::string> responses);
  /// Makes the next `count` calls for `tag` fail with a transient error.
  void fail_next(const std::string& tag, int count);

  std::string content_for(const ChatRequest& request) override;
  std::string id() const override { return id_; }
  bool deterministic() const override { return true; }

  int calls_for(const std::string& tag) const;

 private:
  struct Rule {
    std::vector<std::string> responses;
    std::size_t served = 0;
    int failures_left = 0;
  };

  std::string serve(Rule& rule, const std::string& tag);

  std::string id_;
  mutable std::mutex mutex_;
  std::map<std::string, Rule> by_tag_;
  std::map<std::string, Rule> by_fingerprint_;
  std::map<std::string, Rule> by_prefix_;
  std::map<std::string, int> calls_;
};

/// Chat-completion HTTP endpoint speaking the common
/// {"model", "messages": [{"role", "content"}]} wire schema.
class RemoteChatBackend : public ChatBackend {
 public:
  struct Config {
    /// Full URL, e.g. https://api.openai.com/v1/chat/completions
    std::string endpoint;
    std::string model = "gpt-3.5-turbo";
    /// Name of the environment variable holding the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{60};
  };

  explicit RemoteChatBackend(Config config);

  std::string content_for(const ChatRequest& request) override;
  std::string id() const override;

  /// Request body for `request` (exposed for tests).
  std::string request_body(const ChatRequest& request) const;
  /// Extracts choices[0].message.content. Throws BackendRefused.
  static std::string extract_content(const std::string& body);

 private:
  Config config_;
};

/// Builds a backend from a CLI spec: "mock:<script>" or
/// "openai:<url>[#model]".
std::shared_ptr<ChatBackend> make_backend(const std::string& spec);

}  // namespace uiinstruct
