// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

std::string iso_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace

std::vector<TransitionSpec> parse_transitions(std::string_view jsonl) {
  std::vector<TransitionSpec> out;
  int lineno = 0;
  for (auto line : text::split_lines(jsonl)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& tap = j.at("tap");
      if (!tap.is_array() || tap.size() != 2) throw ValidationError("tap must be [x, y]");
      TransitionSpec t{j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                       Point{tap.at(0).get<int>(), tap.at(1).get<int>()}};
      if (t.tap.x < 0 || t.tap.y < 0) throw ValidationError("tap coordinates must be non-negative");
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("transitions line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("transitions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

CorpusInput load_corpus_dir(const std::filesystem::path& dir, const DetectionLoader& loader, double threshold,
                            const std::set<std::string>& exclude, int concurrency) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("corpus directory " + dir.string() + " not found");
  std::vector<std::filesystem::path> images;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    if (exclude.contains(entry.path().stem().string())) continue;
    images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());

  std::vector<std::optional<Screen>> loaded(images.size());
  std::mutex failed_mutex;
  CorpusInput input;
  detail::parallel_for(images.size(), concurrency, [&](std::size_t i) {
    const auto id = images[i].stem().string();
    try {
      loaded[i] = filter_by_confidence(loader.load_screen(images[i], id), threshold);
    } catch (const Error& e) {
      spdlog::warn("screen {} skipped: {}", id, e.what());
      std::lock_guard lock(failed_mutex);
      input.failed.push_back(id);
    }
  });
  std::sort(input.failed.begin(), input.failed.end());
  for (auto& s : loaded) {
    if (s) input.screens.push_back(std::move(*s));
  }

  const auto transitions = dir / kTransitionsFileName;
  if (std::filesystem::exists(transitions)) {
    for (auto& t : parse_transitions(read_text(transitions))) {
      if (exclude.contains(t.from) || exclude.contains(t.to)) continue;
      input.transitions.push_back(std::move(t));
    }
  }
  spdlog::info("loaded {} screens and {} transitions from {}", input.screens.size(), input.transitions.size(),
               dir.string());
  return input;
}

std::set<std::string> read_id_list(const std::filesystem::path& path) {
  std::set<std::string> ids;
  const auto content = read_text(path);
  for (auto line : text::split_lines(content)) {
    line = text::trim(line);
    if (!line.empty() && !line.starts_with('#')) ids.emplace(line);
  }
  return ids;
}

std::string provenance_timestamp(const ChatBackend& backend) {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    char* end = nullptr;
    const long long value = std::strtoll(epoch, &end, 10);
    if (end != nullptr && *end == '\0' && value >= 0) return iso_utc(static_cast<std::time_t>(value));
    spdlog::warn("ignoring malformed SOURCE_DATE_EPOCH '{}'", epoch);
  }
  if (backend.deterministic()) return iso_utc(0);
  return iso_utc(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

CorpusStats run_generate(const GenerateOptions& options, std::shared_ptr<ChatBackend> backend) {
  if (!backend) throw std::invalid_argument("no chat backend given");
  const auto assets = PromptAssets::load(options.prompt_dir);
  const DetectionLoader loader(options.detector.value_or(
      DetectionSource{DetectionSourceKind::kAnnotationFile, options.corpus_dir.string()}));
  const auto input = load_corpus_dir(options.corpus_dir, loader, options.threshold, options.holdout,
                                     options.concurrency);

  LlmGateway gateway(backend, options.retry);
  if (options.audit_log) gateway.open_audit_file(*options.audit_log);

  GenerationOptions gen_options;
  gen_options.seed = options.seed;
  gen_options.concurrency = options.concurrency;
  gen_options.timestamp = provenance_timestamp(*backend);
  const auto generated = run_generation(input.screens, input.transitions, assets, gateway, gen_options);

  AssemblyOptions assembly;
  assembly.out_dir = options.out_dir;
  assembly.size = options.size;
  assembly.plan = options.mix;
  assembly.preprocess = options.preprocess;
  assembly.seed = options.seed;
  assembly.waived = options.waived;
  assembly.concurrency = options.concurrency;
  std::filesystem::create_directories(options.out_dir);
  return assemble_corpus(generated.samples, generated.stats, assembly);
}

}  // namespace uiinstruct
