// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/llm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "http_url.hpp"
#include "httplib.h"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

}  // namespace

std::string_view role_name(Role role) noexcept { return role == Role::kUser ? "user" : "assistant"; }

void ChatRequest::validate() const {
  if (turns.empty()) throw std::invalid_argument("chat request needs at least one turn");
  if (turns.back().role != Role::kUser) throw std::invalid_argument("final chat turn must come from the user");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (max_tokens <= 0) throw std::invalid_argument("max_tokens must be positive");
}

std::string ChatRequest::fingerprint() const {
  std::uint64_t h = text::fnv1a64(system_message);
  for (const auto& turn : turns) {
    h = text::fnv1a64(role_name(turn.role), h);
    h = text::fnv1a64(std::string_view("\x1f", 1), h);
    h = text::fnv1a64(turn.content, h);
    h = text::fnv1a64(std::string_view("\x1e", 1), h);
  }
  return text::hex64(h);
}

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (initial_backoff.count() < 0) throw std::invalid_argument("initial_backoff must be >= 0");
  if (!(backoff_multiplier >= 1.0)) throw std::invalid_argument("backoff_multiplier must be >= 1");
  if (max_in_flight < 0 || max_requests_per_minute < 0) throw std::invalid_argument("rate limits must be >= 0");
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds(0);
  const double factor = std::pow(backoff_multiplier, attempt - 2);
  return std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(initial_backoff.count()) * factor));
}

RateLimiter::RateLimiter(int max_in_flight, int max_per_minute)
    : max_in_flight_(max_in_flight), max_per_minute_(max_per_minute) {}

void RateLimiter::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    if (max_in_flight_ > 0 && in_flight_ >= max_in_flight_) {
      cv_.wait(lock);
      continue;
    }
    if (max_per_minute_ > 0) {
      const auto now = Clock::now();
      while (!window_.empty() && now - window_.front() >= std::chrono::minutes(1)) window_.pop_front();
      if (static_cast<int>(window_.size()) >= max_per_minute_) {
        cv_.wait_until(lock, window_.front() + std::chrono::minutes(1));
        continue;
      }
      window_.push_back(now);
    }
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
    return;
  }
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_all();
}

int RateLimiter::in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

int RateLimiter::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend, RetryPolicy policy)
    : backend_(std::move(backend)),
      policy_(policy),
      limiter_(policy.max_in_flight, policy.max_requests_per_minute),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!backend_) throw std::invalid_argument("LlmGateway needs a backend");
  policy_.validate();
}

void LlmGateway::set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

void LlmGateway::open_audit_file(const std::filesystem::path& path) {
  std::lock_guard lock(audit_mutex_);
  audit_file_.open(path, std::ios::out | std::ios::app);
  if (!audit_file_) throw std::runtime_error("cannot open audit log " + path.string());
}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
  request.validate();
  std::string last_error;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(policy_.backoff_before(attempt));

    AuditEntry entry;
    entry.request_tag = request.request_tag;
    entry.attempt = attempt;
    entry.backend_id = backend_->id();
    entry.system_message = request.system_message;
    entry.turns = request.turns;
    entry.temperature = request.temperature;

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    };
    try {
      std::string content;
      {
        RateLimiter::Permit permit(limiter_);
        content = backend_->content_for(request);
      }
      const auto latency = elapsed();
      entry.outcome = "ok";
      entry.detail = content;
      entry.latency_ms = latency.count();
      record(std::move(entry));
      return ChatResponse{std::move(content), backend_->id(), latency};
    } catch (const TransientBackendError& e) {
      last_error = e.what();
      entry.outcome = "transient";
      entry.detail = last_error;
      entry.latency_ms = elapsed().count();
      record(std::move(entry));
      spdlog::debug("request {} attempt {} failed: {}", request.request_tag, attempt, last_error);
    } catch (const BackendRefused& e) {
      entry.outcome = "refused";
      entry.detail = e.what();
      entry.latency_ms = elapsed().count();
      record(std::move(entry));
      throw;
    }
  }
  throw BackendExhausted("request " + request.request_tag + " failed after " + std::to_string(policy_.max_attempts) +
                             " attempt(s): " + last_error,
                         policy_.max_attempts);
}

void LlmGateway::record(AuditEntry entry) {
  std::lock_guard lock(audit_mutex_);
  if (audit_file_.is_open()) {
    ordered_json j;
    j["tag"] = entry.request_tag;
    j["attempt"] = entry.attempt;
    j["backend"] = entry.backend_id;
    j["system"] = entry.system_message;
    j["turns"] = json::array();
    for (const auto& t : entry.turns) j["turns"].push_back({{"role", role_name(t.role)}, {"content", t.content}});
    j["temperature"] = entry.temperature;
    j["outcome"] = entry.outcome;
    j["detail"] = entry.detail;
    j["latency_ms"] = entry.latency_ms;
    audit_file_ << j.dump() << '\n';
    audit_file_.flush();
  }
  audit_.push_back(std::move(entry));
}

std::vector<AuditEntry> LlmGateway::audit_log() const {
  std::lock_guard lock(audit_mutex_);
  return audit_;
}

std::vector<AuditEntry> LlmGateway::audit_for(const std::string& request_tag) const {
  std::lock_guard lock(audit_mutex_);
  std::vector<AuditEntry> out;
  std::copy_if(audit_.begin(), audit_.end(), std::back_inserter(out),
               [&](const AuditEntry& e) { return e.request_tag == request_tag; });
  return out;
}

int LlmGateway::attempts_for(const std::string& request_tag) const {
  std::lock_guard lock(audit_mutex_);
  return static_cast<int>(std::count_if(audit_.begin(), audit_.end(),
                                        [&](const AuditEntry& e) { return e.request_tag == request_tag; }));
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::string id) : id_(std::move(id)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script " + path.string());
  auto backend = std::make_shared<ScriptedBackend>("scripted-mock:" + path.filename().string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    json rule;
    try {
      rule = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(where + e.what());
    }
    std::vector<std::string> responses;
    if (rule.contains("response")) {
      responses.push_back(rule.at("response").get<std::string>());
    } else if (rule.contains("responses")) {
      responses = rule.at("responses").get<std::vector<std::string>>();
    }
    if (responses.empty()) throw std::runtime_error(where + "rule needs \"response\" or \"responses\"");
    const int failures = rule.value("fail", 0);
    if (rule.contains("tag")) {
      backend->script_tag(rule.at("tag").get<std::string>(), std::move(responses), failures);
    } else if (rule.contains("fingerprint")) {
      backend->script_fingerprint(rule.at("fingerprint").get<std::string>(), std::move(responses));
    } else if (rule.contains("prefix")) {
      backend->script_prefix(rule.at("prefix").get<std::string>(), std::move(responses));
    } else {
      throw std::runtime_error(where + "rule needs one of \"tag\", \"fingerprint\", \"prefix\"");
    }
  }
  return backend;
}

void ScriptedBackend::script_tag(const std::string& tag, std::vector<std::string> responses, int failures) {
  std::lock_guard lock(mutex_);
  by_tag_[tag] = Rule{std::move(responses), 0, failures};
}

void ScriptedBackend::script_fingerprint(const std::string& fingerprint, std::vector<std::string> responses) {
  std::lock_guard lock(mutex_);
  by_fingerprint_[fingerprint] = Rule{std::move(responses), 0, 0};
}

void ScriptedBackend::script_prefix(const std::string& prefix, std::vector<std::string> responses) {
  std::lock_guard lock(mutex_);
  by_prefix_[prefix] = Rule{std::move(responses), 0, 0};
}

void ScriptedBackend::fail_next(const std::string& tag, int count) {
  std::lock_guard lock(mutex_);
  by_tag_[tag].failures_left += count;
}

std::string ScriptedBackend::serve(Rule& rule, const std::string& tag) {
  if (rule.failures_left > 0) {
    --rule.failures_left;
    throw TransientBackendError("scripted transient failure for " + tag);
  }
  if (rule.responses.empty()) throw BackendRefused("no scripted response for " + tag);
  const auto index = std::min(rule.served, rule.responses.size() - 1);
  ++rule.served;
  return rule.responses[index];
}

std::string ScriptedBackend::content_for(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  ++calls_[request.request_tag];
  if (auto it = by_tag_.find(request.request_tag); it != by_tag_.end()) {
    return serve(it->second, request.request_tag);
  }
  if (auto it = by_fingerprint_.find(request.fingerprint()); it != by_fingerprint_.end()) {
    return serve(it->second, request.request_tag);
  }
  Rule* best = nullptr;
  std::size_t best_len = 0;
  for (auto& [prefix, rule] : by_prefix_) {
    if (request.request_tag.starts_with(prefix) && (best == nullptr || prefix.size() > best_len)) {
      best = &rule;
      best_len = prefix.size();
    }
  }
  if (best != nullptr) return serve(*best, request.request_tag);
  throw BackendRefused("no scripted response for request " + request.request_tag);
}

int ScriptedBackend::calls_for(const std::string& tag) const {
  std::lock_guard lock(mutex_);
  auto it = calls_.find(tag);
  return it == calls_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// RemoteChatBackend

RemoteChatBackend::RemoteChatBackend(Config config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw std::invalid_argument("remote backend needs an endpoint URL");
}

std::string RemoteChatBackend::id() const { return "remote:" + config_.model; }

std::string RemoteChatBackend::request_body(const ChatRequest& request) const {
  ordered_json body;
  body["model"] = config_.model;
  body["messages"] = json::array();
  if (!request.system_message.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", request.system_message}});
  }
  for (const auto& turn : request.turns) {
    body["messages"].push_back({{"role", role_name(turn.role)}, {"content", turn.content}});
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  return body.dump();
}

std::string RemoteChatBackend::extract_content(const std::string& body) {
  try {
    const auto j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendRefused("chat response content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendRefused(std::string("unexpected chat response body: ") + e.what());
  }
}

std::string RemoteChatBackend::content_for(const ChatRequest& request) {
  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(url.path, headers, request_body(request), "application/json");
  if (!res) throw TransientBackendError("chat endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status >= 200 && res->status < 300) return extract_content(res->body);
  const auto message = "chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
  if (is_transient_status(res->status)) throw TransientBackendError(message);
  throw BackendRefused(message);
}

std::shared_ptr<ChatBackend> make_backend(const std::string& spec) {
  if (spec.starts_with("mock:")) return ScriptedBackend::from_file(spec.substr(5));
  if (spec.starts_with("openai:")) {
    RemoteChatBackend::Config config;
    auto rest = spec.substr(7);
    if (auto hash = rest.rfind('#'); hash != std::string::npos) {
      config.model = rest.substr(hash + 1);
      rest = rest.substr(0, hash);
    }
    config.endpoint = rest;
    return std::make_shared<RemoteChatBackend>(std::move(config));
  }
  throw std::invalid_argument("unknown backend spec '" + spec + "' (expected mock:<script> or openai:<url>[#model])");
}

}  // namespace uiinstruct
