// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/rating.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::size_t kMaxRaterIdLength = 128;

double pct(int part, int total) { return total == 0 ? 0.0 : 100.0 * part / total; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ApiResponse json_response(int status, const ojson& body) { return {status, body.dump(), "application/json"}; }

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, ojson{{"error", message}});
}

std::optional<std::string> valid_rater(std::string_view rater) {
  rater = text::trim(rater);
  if (rater.empty() || rater.size() > kMaxRaterIdLength) return std::nullopt;
  return std::string(rater);
}

ojson counts_json(const PreferenceCounts& c) {
  return {{"first", c.first},           {"second", c.second},          {"same", c.same},
          {"total", c.total()},         {"first_pct", c.first_pct()},  {"second_pct", c.second_pct()},
          {"same_pct", c.same_pct()}};
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("write to " + path.string() + " failed: " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::vector<RatingPair> build_rating_pairs(const std::vector<ModelDescription>& first, const std::string& first_model,
                                           const std::vector<ModelDescription>& second,
                                           const std::string& second_model, Rng& rng) {
  if (first_model.empty() || second_model.empty() || first_model == second_model) {
    throw std::invalid_argument("rating pairs need two distinct, non-empty model names");
  }
  auto index = [](const std::vector<ModelDescription>& list, const std::string& model) {
    std::map<std::string, const ModelDescription*> out;
    for (const auto& d : list) {
      if (text::trim(d.description).empty()) {
        throw MissingDescription(model + " has a blank description for screen " + d.screen_id);
      }
      if (!out.emplace(d.screen_id, &d).second) {
        throw std::invalid_argument(model + " has two descriptions for screen " + d.screen_id);
      }
    }
    return out;
  };
  const auto a = index(first, first_model);
  const auto b = index(second, second_model);
  for (const auto& [id, _] : a) {
    if (!b.contains(id)) throw MissingDescription(second_model + " has no description for screen " + id);
  }
  for (const auto& [id, _] : b) {
    if (!a.contains(id)) throw MissingDescription(first_model + " has no description for screen " + id);
  }

  std::vector<RatingPair> pairs;
  int next_id = 1;
  for (const auto& [screen_id, d1] : a) {
    const auto* d2 = b.at(screen_id);
    RatingPair p;
    p.pair_id = next_id++;
    p.screen_id = screen_id;
    p.image_ref = d1->image_ref.empty() ? d2->image_ref : d1->image_ref;
    p.first_model = first_model;
    p.second_model = second_model;
    p.a_is_first = rng.coin();
    p.description_a = p.a_is_first ? d1->description : d2->description;
    p.description_b = p.a_is_first ? d2->description : d1->description;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

ojson pair_to_json(const RatingPair& p) {
  return {{"pair_id", p.pair_id},         {"screen_id", p.screen_id},         {"image", p.image_ref},
          {"description_a", p.description_a}, {"description_b", p.description_b}, {"first_model", p.first_model},
          {"second_model", p.second_model}, {"a_is_first", p.a_is_first}};
}

RatingPair pair_from_json(const nlohmann::json& j) {
  try {
    RatingPair p;
    p.pair_id = j.at("pair_id").get<int>();
    p.screen_id = j.at("screen_id").get<std::string>();
    p.image_ref = j.at("image").get<std::string>();
    p.description_a = j.at("description_a").get<std::string>();
    p.description_b = j.at("description_b").get<std::string>();
    p.first_model = j.at("first_model").get<std::string>();
    p.second_model = j.at("second_model").get<std::string>();
    p.a_is_first = j.at("a_is_first").get<bool>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed rating pair: ") + e.what());
  }
}

std::vector<RatingPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read pairs file " + path.string());
  std::vector<RatingPair> pairs;
  std::set<int> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("bad JSON in " + path.string() + ": " + e.what());
    }
    auto p = pair_from_json(j);
    if (!ids.insert(p.pair_id).second) throw ValidationError("duplicate pair id " + std::to_string(p.pair_id));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_pairs(const std::filesystem::path& path, const std::vector<RatingPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write pairs file " + path.string());
  for (const auto& p : pairs) out << pair_to_json(p).dump() << '\n';
}

ojson client_payload(const RatingPair& p) {
  return {{"pair_id", p.pair_id},
          {"image_url", "/api/pairs/" + std::to_string(p.pair_id) + "/image"},
          {"description_a", p.description_a},
          {"description_b", p.description_b}};
}

std::string_view choice_name(Choice c) noexcept {
  switch (c) {
    case Choice::kA: return "A";
    case Choice::kB: return "B";
    case Choice::kSame: return "same";
  }
  return "same";
}

std::optional<Choice> parse_choice(std::string_view s) noexcept {
  if (text::iequals(s, "A")) return Choice::kA;
  if (text::iequals(s, "B")) return Choice::kB;
  if (text::iequals(s, "same")) return Choice::kSame;
  return std::nullopt;
}

ojson vote_to_json(const RatingVote& v) {
  return {{"pair_id", v.pair_id}, {"rater_id", v.rater_id}, {"choice", choice_name(v.choice)},
          {"timestamp", v.timestamp}};
}

RatingVote vote_from_json(const nlohmann::json& j) {
  try {
    RatingVote v;
    v.pair_id = j.at("pair_id").get<int>();
    v.rater_id = j.at("rater_id").get<std::string>();
    const auto choice = parse_choice(j.at("choice").get<std::string>());
    if (!choice) throw ValidationError("bad choice " + j.at("choice").dump());
    v.choice = *choice;
    v.timestamp = j.value("timestamp", "");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed vote: ") + e.what());
  }
}

double PreferenceCounts::first_pct() const noexcept { return pct(first, total()); }
double PreferenceCounts::second_pct() const noexcept { return pct(second, total()); }
double PreferenceCounts::same_pct() const noexcept { return pct(same, total()); }

PreferenceReport tally_ratings(const std::vector<RatingPair>& pairs, const std::vector<RatingVote>& votes) {
  PreferenceReport report;
  std::map<int, const RatingPair*> by_id;
  for (const auto& p : pairs) {
    by_id.emplace(p.pair_id, &p);
    if (report.first_model.empty()) {
      report.first_model = p.first_model;
      report.second_model = p.second_model;
    }
  }
  std::map<std::pair<int, std::string>, const RatingVote*> latest;
  for (const auto& v : votes) latest[{v.pair_id, v.rater_id}] = &v;

  for (const auto& [key, v] : latest) {
    auto it = by_id.find(v->pair_id);
    if (it == by_id.end()) {
      ++report.unresolved;
      continue;
    }
    auto& rater = report.per_rater[v->rater_id];
    if (v->choice == Choice::kSame) {
      ++report.overall.same;
      ++rater.same;
      continue;
    }
    const auto& pair = *it->second;
    const auto& chosen = v->choice == Choice::kA ? pair.model_of_a() : pair.model_of_b();
    if (chosen == pair.first_model) {
      ++report.overall.first;
      ++rater.first;
    } else {
      ++report.overall.second;
      ++rater.second;
    }
  }
  return report;
}

ojson to_json(const PreferenceReport& report) {
  ojson per = ojson::object();
  for (const auto& [rater, counts] : report.per_rater) per[rater] = counts_json(counts);
  return {{"first_model", report.first_model},
          {"second_model", report.second_model},
          {"overall", counts_json(report.overall)},
          {"per_rater", std::move(per)},
          {"unresolved", report.unresolved}};
}

RatingStore::RatingStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      try {
        auto vote = vote_from_json(nlohmann::json::parse(line));
        effective_[{vote.pair_id, vote.rater_id}] = vote;
        audit_.push_back(std::move(vote));
      } catch (const std::exception& e) {
        spdlog::warn("{}:{}: skipping unreadable vote: {}", path_.string(), lineno, e.what());
      }
    }
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw std::runtime_error("cannot open vote store " + path_.string() + ": " + std::strerror(errno));
}

RatingStore::~RatingStore() {
  if (fd_ >= 0) ::close(fd_);
}

void RatingStore::record(const RatingVote& vote) {
  const auto line = vote_to_json(vote).dump() + "\n";
  std::lock_guard lock(mutex_);
  write_all(fd_, line, path_);
  if (::fsync(fd_) != 0) throw std::runtime_error("fsync of " + path_.string() + " failed: " + std::strerror(errno));
  effective_[{vote.pair_id, vote.rater_id}] = vote;
  audit_.push_back(vote);
}

std::vector<RatingVote> RatingStore::votes() const {
  std::lock_guard lock(mutex_);
  std::vector<RatingVote> out;
  out.reserve(effective_.size());
  for (const auto& [_, v] : effective_) out.push_back(v);
  return out;
}

std::vector<RatingVote> RatingStore::audit() const {
  std::lock_guard lock(mutex_);
  return audit_;
}

std::set<int> RatingStore::rated_by(std::string_view rater) const {
  std::lock_guard lock(mutex_);
  std::set<int> out;
  for (const auto& [key, _] : effective_) {
    if (key.second == rater) out.insert(key.first);
  }
  return out;
}

struct RatingService::Server {
  httplib::Server http;
};

RatingService::RatingService(std::vector<RatingPair> pairs, RatingStore& store, std::filesystem::path image_root,
                             std::optional<std::filesystem::path> static_dir)
    : pairs_(std::move(pairs)),
      store_(store),
      image_root_(std::move(image_root)),
      static_dir_(std::move(static_dir)),
      server_(std::make_unique<Server>()) {
  std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; });
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (!by_id_.emplace(pairs_[i].pair_id, i).second) {
      throw std::invalid_argument("duplicate pair id " + std::to_string(pairs_[i].pair_id));
    }
  }

  auto& http = server_->http;
  auto send = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto pair_id_of = [](const httplib::Request& req) -> std::optional<int> {
    try {
      return std::stoi(req.matches[1].str());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  http.Get("/api/next", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, next(req.get_param_value("rater")));
  });
  http.Get(R"(/api/pairs/(\d+))", [this, send, pair_id_of](const httplib::Request& req, httplib::Response& res) {
    const auto id = pair_id_of(req);
    send(res, id ? pair(*id) : error_response(404, "unknown pair"));
  });
  http.Get(R"(/api/pairs/(\d+)/image)", [this, send, pair_id_of](const httplib::Request& req, httplib::Response& res) {
    const auto id = pair_id_of(req);
    send(res, id ? image(*id) : error_response(404, "unknown pair"));
  });
  http.Post("/api/votes", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, vote(req.body));
  });
  http.Get("/api/progress", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, progress(req.get_param_value("rater")));
  });
  http.Get("/api/admin/tally", [this, send](const httplib::Request&, httplib::Response& res) { send(res, tally()); });
  if (static_dir_) {
    if (!http.set_mount_point("/", static_dir_->string())) {
      throw std::invalid_argument("static directory " + static_dir_->string() + " does not exist");
    }
  }
  http.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("{} {}: {}", req.method, req.path, what);
    res.status = 500;
    res.set_content(ojson{{"error", what}}.dump(), "application/json");
  });
}

RatingService::~RatingService() { stop(); }

ojson RatingService::progress_json(std::string_view rater) const {
  const auto rated = store_.rated_by(rater);
  const auto completed = std::count_if(pairs_.begin(), pairs_.end(),
                                       [&](const RatingPair& p) { return rated.contains(p.pair_id); });
  return {{"rater_id", rater}, {"completed", completed}, {"total", pairs_.size()}};
}

ApiResponse RatingService::next(std::string_view rater) const {
  const auto id = valid_rater(rater);
  if (!id) return error_response(400, "rater must be a non-empty id of at most 128 characters");
  const auto rated = store_.rated_by(*id);
  for (const auto& p : pairs_) {
    if (!rated.contains(p.pair_id)) {
      return json_response(200, ojson{{"done", false}, {"pair", client_payload(p)}, {"progress", progress_json(*id)}});
    }
  }
  return json_response(200, ojson{{"done", true}, {"progress", progress_json(*id)}});
}

ApiResponse RatingService::pair(int pair_id) const {
  const auto it = by_id_.find(pair_id);
  if (it == by_id_.end()) return error_response(404, "unknown pair " + std::to_string(pair_id));
  return json_response(200, client_payload(pairs_[it->second]));
}

ApiResponse RatingService::image(int pair_id) const {
  const auto it = by_id_.find(pair_id);
  if (it == by_id_.end()) return error_response(404, "unknown pair " + std::to_string(pair_id));
  std::filesystem::path path = pairs_[it->second].image_ref;
  if (path.is_relative()) path = image_root_ / path;
  try {
    const auto bytes = read_file_bytes(path);
    return {200, std::string(bytes.begin(), bytes.end()), "image/png"};
  } catch (const std::exception& e) {
    spdlog::error("image for pair {}: {}", pair_id, e.what());
    return error_response(404, "image unavailable for pair " + std::to_string(pair_id));
  }
}

ApiResponse RatingService::vote(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return error_response(400, "body is not valid JSON");
  }
  if (!j.is_object()) return error_response(400, "body must be a JSON object");
  if (!j.contains("pair_id") || !j["pair_id"].is_number_integer()) {
    return error_response(400, "pair_id must be an integer");
  }
  if (!j.contains("rater_id") || !j["rater_id"].is_string()) return error_response(400, "rater_id must be a string");
  if (!j.contains("choice") || !j["choice"].is_string()) return error_response(400, "choice must be A, B or same");
  const auto rater = valid_rater(j["rater_id"].get<std::string>());
  if (!rater) return error_response(400, "rater_id must be non-empty and at most 128 characters");
  const auto choice = parse_choice(j["choice"].get<std::string>());
  if (!choice) return error_response(400, "choice must be A, B or same");
  const int pair_id = j["pair_id"].get<int>();
  if (!by_id_.contains(pair_id)) return error_response(404, "unknown pair " + std::to_string(pair_id));

  store_.record({pair_id, *rater, *choice, utc_now()});
  return json_response(200, ojson{{"ok", true}, {"progress", progress_json(*rater)}});
}

ApiResponse RatingService::progress(std::string_view rater) const {
  const auto id = valid_rater(rater);
  if (!id) return error_response(400, "rater must be a non-empty id of at most 128 characters");
  return json_response(200, progress_json(*id));
}

ApiResponse RatingService::tally() const { return json_response(200, to_json(tally_ratings(pairs_, store_.votes()))); }

int RatingService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->http.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!server_->http.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void RatingService::listen() { server_->http.listen_after_bind(); }

void RatingService::stop() {
  if (server_ && server_->http.is_running()) server_->http.stop();
}

}  // namespace uiinstruct
