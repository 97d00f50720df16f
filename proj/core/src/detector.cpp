// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/detector.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "uiinstruct/errors.hpp"
#include "http_url.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

using json = nlohmann::json;

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

// Runs `command` through /bin/sh and returns its stdout. Kills the child
// when the deadline passes.
std::string run_command(const std::string& command, std::chrono::milliseconds timeout) {
  int fds[2];
  if (pipe(fds) != 0) throw SourceUnavailable("pipe() failed");
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw SourceUnavailable("fork() failed");
  }
  if (pid == 0) {
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(fds[1]);

  std::string output;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool timed_out = false;
  char buffer[4096];
  for (;;) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready == 0) {
      timed_out = true;
      break;
    }
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    const auto n = read(fds[0], buffer, sizeof buffer);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buffer, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  if (timed_out) kill(pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) throw SourceUnavailable("detector command timed out: " + command);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw SourceUnavailable("detector command failed (status " + std::to_string(status) + "): " + command);
  }
  return output;
}

std::optional<std::string> optional_string(const json& record, const char* key, std::size_t line_no) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw MalformedDetection("line " + std::to_string(line_no) + ": '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

RawDetection parse_record(const json& record, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no) + ": ";
  if (!record.is_object()) throw MalformedDetection(where + "record must be a JSON object");

  RawDetection raw;
  auto label = record.find("label");
  if (label == record.end() || !label->is_string() || label->get<std::string>().empty()) {
    throw MalformedDetection(where + "'label' must be a non-empty string");
  }
  raw.label = label->get<std::string>();

  auto box = record.find("box");
  if (box == record.end() || !box->is_array() || box->size() != 4) {
    throw MalformedDetection(where + "'box' must be an array of 4 numbers");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& v = (*box)[i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw MalformedDetection(where + "'box' must be an array of 4 finite numbers");
    }
    raw.box[i] = v.get<double>();
  }
  if (raw.box[0] > raw.box[2] || raw.box[1] > raw.box[3]) {
    throw MalformedDetection(where + "'box' corners out of order");
  }

  if (auto conf = record.find("confidence"); conf != record.end() && !conf->is_null()) {
    if (!conf->is_number()) throw MalformedDetection(where + "'confidence' must be a number");
    const double c = conf->get<double>();
    if (!(c >= 0.0 && c <= 1.0)) {
      throw MalformedDetection(where + "confidence " + conf->dump() + " outside [0, 1]");
    }
    raw.confidence = c;
  }
  raw.text = optional_string(record, "text", line_no);
  raw.icon_subtype = optional_string(record, "iconType", line_no);
  return raw;
}

}  // namespace

void DetectionSource::validate() const {
  if (locator.empty()) throw std::invalid_argument("detection source locator must not be empty");
  if (timeout.count() <= 0) throw std::invalid_argument("detection source timeout must be positive");
}

DetectionSource DetectionSource::parse(std::string_view spec) {
  DetectionSource source;
  auto take = [&](std::string_view prefix, DetectionSourceKind kind) {
    if (!spec.starts_with(prefix)) return false;
    source.kind = kind;
    source.locator = std::string(spec.substr(prefix.size()));
    return true;
  };
  if (!take("annotation:", DetectionSourceKind::kAnnotationFile) &&
      !take("command:", DetectionSourceKind::kExternalCommand) &&
      !take("http:", DetectionSourceKind::kHttpEndpoint)) {
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
      source.kind = DetectionSourceKind::kHttpEndpoint;
    }
    source.locator = std::string(spec);
  }
  source.validate();
  return source;
}

std::vector<RawDetection> parse_detections(std::string_view payload) {
  std::vector<RawDetection> out;
  std::size_t line_no = 0;
  for (auto line : text::split_lines(payload)) {
    ++line_no;
    line = text::trim(line);
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedDetection("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    out.push_back(parse_record(record, line_no));
  }
  return out;
}

std::string serialize_detections(const std::vector<RawDetection>& records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["box"] = r.box;
    if (r.text) j["text"] = *r.text;
    if (r.icon_subtype) j["iconType"] = *r.icon_subtype;
    if (r.confidence) j["confidence"] = *r.confidence;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

DetectionLoader::DetectionLoader(DetectionSource source) : source_(std::move(source)) {
  source_.validate();
}

std::string DetectionLoader::fetch(const std::filesystem::path& image_ref, const std::string& screen_id) const {
  switch (source_.kind) {
    case DetectionSourceKind::kAnnotationFile: {
      const auto path = std::filesystem::path(source_.locator) / (screen_id + ".detections");
      try {
        auto bytes = read_file_bytes(path);
        return {bytes.begin(), bytes.end()};
      } catch (const std::runtime_error& e) {
        throw SourceUnavailable(e.what());
      }
    }
    case DetectionSourceKind::kExternalCommand: {
      std::string command = source_.locator;
      text::replace_all(command, "{image}", shell_quote(image_ref.string()));
      text::replace_all(command, "{screen_id}", shell_quote(screen_id));
      return run_command(command, source_.timeout);
    }
    case DetectionSourceKind::kHttpEndpoint: {
      std::vector<std::uint8_t> bytes;
      try {
        bytes = read_file_bytes(image_ref);
      } catch (const std::runtime_error& e) {
        throw SourceUnavailable(e.what());
      }
      const auto url = split_url(source_.locator);
      httplib::Client client(url.origin);
      const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(source_.timeout);
      const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(source_.timeout - seconds);
      client.set_connection_timeout(seconds.count(), micros.count());
      client.set_read_timeout(seconds.count(), micros.count());
      client.set_write_timeout(seconds.count(), micros.count());
      auto res = client.Post(url.path, reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
      if (!res) {
        throw SourceUnavailable("detector endpoint unreachable: " + httplib::to_string(res.error()));
      }
      if (res->status < 200 || res->status >= 300) {
        throw SourceUnavailable("detector endpoint returned HTTP " + std::to_string(res->status));
      }
      return res->body;
    }
  }
  throw SourceUnavailable("unknown detection source kind");
}

Screen DetectionLoader::load_screen(const std::filesystem::path& image_ref, const std::string& screen_id,
                                    const LoadOptions& options) const {
  int width = 0;
  int height = 0;
  if (options.width && options.height) {
    width = *options.width;
    height = *options.height;
  } else {
    try {
      const auto size = read_png_size(image_ref);
      width = options.width.value_or(size.width);
      height = options.height.value_or(size.height);
    } catch (const UnreadableImage& e) {
      throw SourceUnavailable(std::string("screen ") + screen_id + ": " + e.what());
    }
  }
  std::vector<RawDetection> records;
  try {
    records = parse_detections(fetch(image_ref, screen_id));
  } catch (const MalformedDetection& e) {
    throw MalformedDetection("screen " + screen_id + ": " + e.what());
  }
  return to_screen(records, image_ref.string(), screen_id, width, height);
}

Screen DetectionLoader::to_screen(const std::vector<RawDetection>& records, const std::string& image_ref,
                                  const std::string& screen_id, int width, int height) const {
  std::vector<UIElement> elements;
  elements.reserve(records.size());
  std::size_t dropped = 0;
  for (const auto& raw : records) {
    auto type = element_type_from_label(raw.label);
    if (!type) {
      ++dropped;
      continue;
    }
    UIElement e;
    e.type = *type;
    e.confidence = raw.confidence;
    if (raw.text && !raw.text->empty()) {
      // Embedded line breaks would split the element across prompt lines.
      std::string t = *raw.text;
      text::replace_all(t, "\r\n", " ");
      std::replace(t.begin(), t.end(), '\n', ' ');
      std::replace(t.begin(), t.end(), '\r', ' ');
      e.text = std::move(t);
    }
    if (raw.icon_subtype && !raw.icon_subtype->empty() && e.type == ElementType::kIcon) {
      e.icon_subtype = raw.icon_subtype;
    }
    auto coord = [](double v) { return static_cast<int>(std::max(0L, std::lround(v))); };
    e.box = BoundingBox(coord(raw.box[0]), coord(raw.box[1]), coord(raw.box[2]), coord(raw.box[3]));
    e.ordinal = static_cast<int>(elements.size());
    elements.push_back(std::move(e));
  }
  if (dropped > 0) {
    dropped_labels_.fetch_add(dropped);
    spdlog::warn("screen {}: dropped {} detection(s) with unknown labels", screen_id, dropped);
  }
  try {
    return Screen(screen_id, image_ref, width, height, std::move(elements));
  } catch (const std::invalid_argument& e) {
    throw MalformedDetection(e.what());
  }
}

Screen filter_by_confidence(const Screen& screen, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("confidence threshold must lie in [0, 1]");
  }
  std::vector<UIElement> kept;
  for (const auto& e : screen.elements()) {
    if (e.confidence && *e.confidence < threshold) continue;
    UIElement copy = e;
    copy.ordinal = static_cast<int>(kept.size());
    kept.push_back(std::move(copy));
  }
  return Screen(screen.screen_id(), screen.image_ref(), screen.width(), screen.height(), std::move(kept),
                screen.caption());
}

}  // namespace uiinstruct
