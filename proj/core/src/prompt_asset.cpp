// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <stdexcept>

#include "uiinstruct/datagen.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

constexpr std::array<std::string_view, 6> kSections = {
    "system", "example-1-input", "example-1-output", "example-2-input", "example-2-output", "question-pool",
};

std::optional<std::string_view> section_header(std::string_view line) {
  line = text::trim(line);
  if (line.size() < 3 || line.front() != '[' || line.back() != ']') return std::nullopt;
  return line.substr(1, line.size() - 2);
}

void require_golden(const PromptAsset& asset, std::size_t expected) {
  if (asset.golden_examples.size() != expected) {
    throw std::invalid_argument("prompt asset '" + asset.name + "' needs exactly " + std::to_string(expected) +
                                " golden example(s), found " + std::to_string(asset.golden_examples.size()));
  }
}

}  // namespace

PromptAsset PromptAsset::parse(std::string_view name, std::string_view content) {
  PromptAsset asset;
  asset.name = std::string(name);
  asset.version = text::hex64(text::fnv1a64(content)).substr(0, 12);

  std::map<std::string, std::string, std::less<>> sections;
  std::string* current = nullptr;
  for (auto line : text::split_lines(content)) {
    if (auto header = section_header(line)) {
      if (std::find(kSections.begin(), kSections.end(), *header) == kSections.end()) {
        throw std::invalid_argument("prompt asset '" + asset.name + "': unknown section [" + std::string(*header) + "]");
      }
      if (sections.contains(*header)) {
        throw std::invalid_argument("prompt asset '" + asset.name + "': duplicate section [" + std::string(*header) + "]");
      }
      current = &sections[std::string(*header)];
      continue;
    }
    if (current == nullptr) {
      if (text::trim(line).empty() || line.starts_with('#')) continue;
      throw std::invalid_argument("prompt asset '" + asset.name + "': content before the first section");
    }
    current->append(line);
    current->push_back('\n');
  }

  auto body = [&](std::string_view key) -> std::optional<std::string> {
    auto it = sections.find(key);
    if (it == sections.end()) return std::nullopt;
    return std::string(text::trim(it->second));
  };

  asset.system_message = body("system").value_or("");
  for (int i = 1; i <= 2; ++i) {
    auto input = body("example-" + std::to_string(i) + "-input");
    auto output = body("example-" + std::to_string(i) + "-output");
    if (input.has_value() != output.has_value()) {
      throw std::invalid_argument("prompt asset '" + asset.name + "': example " + std::to_string(i) +
                                  " needs both an input and an output section");
    }
    if (input) asset.golden_examples.push_back({std::move(*input), std::move(*output)});
  }
  if (auto pool = body("question-pool")) {
    for (auto line : text::split_lines(*pool)) {
      line = text::trim(line);
      if (!line.empty()) asset.question_pool.emplace_back(line);
    }
  }
  return asset;
}

PromptAsset PromptAsset::load(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("cannot read prompt asset " + path.string());
  }
  return parse(path.stem().string(), std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

PromptAssets PromptAssets::load(const std::filesystem::path& dir) {
  auto one = [&](SampleKind kind) { return PromptAsset::load(dir / (std::string(sample_kind_name(kind)) + ".prompt")); };
  PromptAssets assets{
      one(SampleKind::kConversation),     one(SampleKind::kDetailedDescription), one(SampleKind::kAvailableActions),
      one(SampleKind::kOutcomePrediction), one(SampleKind::kElementSelection),   one(SampleKind::kGoalPlan),
  };
  assets.validate();
  return assets;
}

void PromptAssets::validate() const {
  require_golden(conversation, 2);
  require_golden(detailed_description, 2);
  require_golden(goal_plan, 2);
  require_golden(available_actions, 0);
  require_golden(outcome_prediction, 0);
  require_golden(element_selection, 0);
  if (detailed_description.question_pool.empty()) {
    throw std::invalid_argument("prompt asset '" + detailed_description.name + "' needs a non-empty question pool");
  }
}

}  // namespace uiinstruct
