// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "http_url.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/eval.hpp"
#include "uiinstruct/image.hpp"

namespace uiinstruct {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

ScriptedVisionClient::ScriptedVisionClient(std::shared_ptr<ScriptedBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) throw std::invalid_argument("scripted vision client needs a backend");
}

std::string ScriptedVisionClient::ask(const VisionQuery& query) {
  ChatRequest request;
  request.turns.push_back({Role::kUser, query.question});
  request.request_tag = query.tag;
  try {
    return backend_->content_for(request);
  } catch (const TransientBackendError& e) {
    throw EndpointUnavailable(e.what());
  } catch (const BackendRefused& e) {
    throw EndpointUnavailable(e.what());
  }
}

RemoteVisionClient::RemoteVisionClient(Config config)
    : config_(std::move(config)),
      limiter_(config_.retry.max_in_flight, config_.retry.max_requests_per_minute),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  config_.retry.validate();
  if (config_.endpoint.empty()) throw std::invalid_argument("vision endpoint URL is empty");
  if (config_.model.empty()) throw std::invalid_argument("vision model name is empty");
}

std::string RemoteVisionClient::id() const { return "remote:" + config_.model; }

std::string RemoteVisionClient::request_body(const VisionQuery& query, std::string_view png_base64) const {
  nlohmann::ordered_json content = nlohmann::ordered_json::array();
  content.push_back({{"type", "text"}, {"text", query.question}});
  content.push_back(
      {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + std::string(png_base64)}}}});
  nlohmann::ordered_json body = {
      {"model", config_.model},
      {"messages", nlohmann::ordered_json::array({{{"role", "user"}, {"content", std::move(content)}}})},
      {"temperature", 0},
  };
  return body.dump();
}

std::string RemoteVisionClient::ask(const VisionQuery& query) {
  const auto png = read_file_bytes(query.image_ref);
  const auto body = request_body(query, base64_encode(png));
  const auto url = split_url(config_.endpoint);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(config_.retry.backoff_before(attempt));
    RateLimiter::Permit permit(limiter_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = "unreachable: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return RemoteChatBackend::extract_content(res->body);
      } catch (const BackendRefused& e) {
        throw EndpointUnavailable(std::string("vision endpoint sent an unusable reply: ") + e.what());
      }
    } else if (is_transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw EndpointUnavailable("vision endpoint refused " + query.tag + ": HTTP " + std::to_string(res->status) +
                                " " + res->body.substr(0, 200));
    }
    spdlog::warn("{} attempt {} failed: {}", query.tag, attempt, last_error);
  }
  throw EndpointUnavailable("vision endpoint failed " + std::to_string(config_.retry.max_attempts) +
                            " attempts for " + query.tag + ": " + last_error);
}

std::shared_ptr<VisionModelClient> make_vision_client(const std::string& spec) {
  if (spec.starts_with("mock:")) {
    return std::make_shared<ScriptedVisionClient>(ScriptedBackend::from_file(spec.substr(5)));
  }
  if (spec.starts_with("openai:")) {
    auto rest = spec.substr(7);
    const auto hash = rest.rfind('#');
    if (hash == std::string::npos) throw std::invalid_argument("vision model spec needs '#<model>': " + spec);
    RemoteVisionClient::Config config;
    config.endpoint = rest.substr(0, hash);
    config.model = rest.substr(hash + 1);
    return std::make_shared<RemoteVisionClient>(std::move(config));
  }
  throw std::invalid_argument("unknown model spec '" + spec + "' (expected mock:<script> or openai:<url>#<model>)");
}

}  // namespace uiinstruct
