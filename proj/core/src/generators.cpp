// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>

#include "uiinstruct/datagen.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/format.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

constexpr std::string_view kCaptionAsset = "builtin:caption@1";
constexpr std::string_view kCaptionReminder = "Reminder: reply with exactly one sentence.";
constexpr std::string_view kDescriptionReminder = "Reminder: reply with the description only.";
constexpr std::string_view kSelectionReminder =
    "Reminder: the answer must name the element to tap by its text or type, and the reply must be "
    "formatted as one \"Question:\" line followed by one \"Answer:\" line.";

// Raised by the element-selection guard; a ParseFailure so it follows the
// same re-prompt path, counted separately.
class GuardRejected : public ParseFailure {
 public:
  using ParseFailure::ParseFailure;
};

constexpr std::array<std::string_view, 7> kKindNames = {
    "conversation",       "concise_description", "detailed_description", "available_actions",
    "outcome_prediction", "element_selection",   "goal_plan",
};

ChatRequest zero_shot(const PromptAsset& asset, std::string user, std::string tag, double temperature) {
  ChatRequest request;
  request.system_message = asset.system_message;
  request.turns.push_back({Role::kUser, std::move(user)});
  request.temperature = temperature;
  request.request_tag = std::move(tag);
  return request;
}

void require_few_shot(const PromptAsset& asset) {
  if (asset.golden_examples.size() != 2) {
    throw PreconditionViolation("prompt asset '" + asset.name + "' must carry exactly two golden examples");
  }
}

const UIElement& require_tapped(const Transition& t) {
  if (!t.tapped_element) {
    throw PreconditionViolation("transition " + transition_key(t) + " has no resolved tapped element");
  }
  if (!t.tapped_element->box.contains(t.tap_point)) {
    throw PreconditionViolation("transition " + transition_key(t) + ": tapped element does not contain the tap");
  }
  if (!t.to_screen.caption()) {
    throw PreconditionViolation("transition " + transition_key(t) + ": destination screen has no caption");
  }
  return *t.tapped_element;
}

std::string transition_prompt(const Transition& t, const UIElement& tapped, std::string_view task) {
  std::string out = "UI elements of the current screen:\n";
  out += format_screen(t.from_screen);
  out += "\n\nTapped element:\n";
  out += format_element(tapped);
  out += "\n\nCaption of the screen shown after the tap:\n";
  out += *t.to_screen.caption();
  out += "\n\n";
  out += task;
  return out;
}

QAPair first_pair(const std::string& content) { return parse_qa_transcript(content).front(); }

}  // namespace

std::string_view sample_kind_name(SampleKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<SampleKind> parse_sample_kind(std::string_view name) noexcept {
  for (auto kind : kAllSampleKinds) {
    if (text::iequals(name, sample_kind_name(kind))) return kind;
  }
  return std::nullopt;
}

void validate_sample(const Sample& sample) {
  if (sample.turns.empty()) throw std::invalid_argument("sample " + sample.sample_id + " has no turns");
  if (sample.kind != SampleKind::kConversation && sample.turns.size() != 1) {
    throw std::invalid_argument("sample " + sample.sample_id + " must have exactly one turn");
  }
  for (const auto& turn : sample.turns) {
    if (text::trim(turn.question).empty() || text::trim(turn.answer).empty()) {
      throw std::invalid_argument("sample " + sample.sample_id + " has an empty question or answer");
    }
  }
}

std::string caption_prompt(const Screen& screen) {
  std::string out = "Given the UI screen ";
  out += format_screen(screen);
  out += ". ";
  out += kCaptionInstruction;
  return out;
}

std::string screen_context(const Screen& screen) {
  if (!screen.caption()) throw PreconditionViolation("screen " + screen.screen_id() + " has no caption");
  std::string out = "UI elements:\n";
  out += format_screen(screen);
  out += "\n\nCaption: ";
  out += *screen.caption();
  return out;
}

ChatRequest build_few_shot_request(const PromptAsset& asset, std::string target_input, std::string tag,
                                   double temperature) {
  ChatRequest request;
  request.system_message = asset.system_message;
  for (const auto& example : asset.golden_examples) {
    request.turns.push_back({Role::kUser, example.input});
    request.turns.push_back({Role::kAssistant, example.output});
  }
  request.turns.push_back({Role::kUser, std::move(target_input)});
  request.temperature = temperature;
  request.request_tag = std::move(tag);
  return request;
}

bool answer_mentions_element(std::string_view answer, const UIElement& element) {
  if (element.has_text()) {
    if (text::icontains(answer, text::trim(*element.text))) return true;
    std::string_view rest = *element.text;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto fragment = text::trim(rest.substr(0, comma));
      if (fragment.size() >= 2 && text::icontains(answer, fragment)) return true;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  if (element.icon_subtype && text::icontains(answer, *element.icon_subtype)) return true;
  return text::icontains(answer, display_name(element.type));
}

std::string transition_key(const Transition& t) {
  return t.from_screen.screen_id() + "=>" + t.to_screen.screen_id() + "@" + std::to_string(t.tap_point.x) + "," +
         std::to_string(t.tap_point.y);
}

SampleGenerator::SampleGenerator(LlmGateway& gateway, std::string timestamp)
    : gateway_(gateway), timestamp_(std::move(timestamp)) {}

template <typename Parse>
auto SampleGenerator::query_with_reprompt(ChatRequest request, SampleKind kind, Parse parse, std::string_view reminder)
    -> decltype(parse(std::string{})) {
  auto& c = counters(kind);
  for (int round = 0;; ++round) {
    const auto response = gateway_.complete(request);
    try {
      return parse(response.content);
    } catch (const GuardRejected& e) {
      ++c.guard_rejections;
      if (round == 1) {
        ++c.dropped;
        throw DroppedSample(request.request_tag + ": " + e.what());
      }
    } catch (const ParseFailure& e) {
      ++c.parse_failures;
      if (round == 1) {
        ++c.dropped;
        throw DroppedSample(request.request_tag + ": " + e.what());
      }
    }
    request.turns.back().content.append("\n\n").append(reminder);
    request.request_tag += "/reprompt";
  }
}

Sample SampleGenerator::make_sample(SampleKind kind, const Screen& screen, std::string id, std::vector<QAPair> turns,
                                    std::string asset) {
  Sample sample;
  sample.sample_id = std::move(id);
  sample.kind = kind;
  sample.image_ref = screen.image_ref();
  sample.screen_id = screen.screen_id();
  sample.turns = std::move(turns);
  sample.provenance = {gateway_.backend().id(), std::move(asset), timestamp_};
  validate_sample(sample);
  ++counters(kind).generated;
  return sample;
}

std::string SampleGenerator::generate_caption(const Screen& screen) {
  if (screen.elements().empty()) {
    ++caption_failures_;
    throw PreconditionViolation("screen " + screen.screen_id() + " has no elements to caption");
  }
  ChatRequest request;
  request.turns.push_back({Role::kUser, caption_prompt(screen)});
  request.temperature = kCaptionTemperature;
  request.request_tag = "caption/" + screen.screen_id();
  try {
    return query_with_reprompt(std::move(request), SampleKind::kConciseDescription,
                               [](const std::string& c) { return parse_single_sentence(c); }, kCaptionReminder);
  } catch (...) {
    ++caption_failures_;
    throw;
  }
}

Sample SampleGenerator::concise_description(const Screen& captioned) {
  if (!captioned.caption()) {
    ++counters(SampleKind::kConciseDescription).skipped;
    throw PreconditionViolation("screen " + captioned.screen_id() + " has no caption");
  }
  return make_sample(SampleKind::kConciseDescription, captioned,
                     captioned.screen_id() + ":" + std::string(sample_kind_name(SampleKind::kConciseDescription)),
                     {{std::string(kCaptionInstruction), *captioned.caption()}}, std::string(kCaptionAsset));
}

Sample SampleGenerator::generate_conversation(const Screen& screen, const PromptAsset& asset) {
  constexpr auto kind = SampleKind::kConversation;
  std::string context;
  try {
    require_few_shot(asset);
    context = screen_context(screen);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  const auto key = screen.screen_id() + ":" + std::string(sample_kind_name(kind));
  auto request = build_few_shot_request(asset, std::move(context), std::string(sample_kind_name(kind)) + "/" +
                                        screen.screen_id(), kGenerationTemperature);
  auto pairs = query_with_reprompt(std::move(request), kind,
                                   [](const std::string& c) { return parse_qa_transcript(c); }, kQaFormatReminder);
  return make_sample(kind, screen, key, std::move(pairs), asset.provenance());
}

Sample SampleGenerator::generate_detailed_description(const Screen& screen, const PromptAsset& asset, Rng& rng) {
  constexpr auto kind = SampleKind::kDetailedDescription;
  std::string context;
  try {
    require_few_shot(asset);
    if (asset.question_pool.empty()) {
      throw PreconditionViolation("prompt asset '" + asset.name + "' has an empty question pool");
    }
    context = screen_context(screen);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  const auto& question = asset.question_pool[static_cast<std::size_t>(rng.uniform(asset.question_pool.size()))];
  context += "\n\nQuestion: ";
  context += question;
  auto request = build_few_shot_request(asset, std::move(context),
                                        std::string(sample_kind_name(kind)) + "/" + screen.screen_id(),
                                        kGenerationTemperature);
  auto answer = query_with_reprompt(std::move(request), kind,
                                    [](const std::string& c) { return parse_free_answer(c); }, kDescriptionReminder);
  return make_sample(kind, screen, screen.screen_id() + ":" + std::string(sample_kind_name(kind)),
                     {{question, std::move(answer)}}, asset.provenance());
}

Sample SampleGenerator::generate_available_actions(const Screen& screen, const PromptAsset& asset) {
  constexpr auto kind = SampleKind::kAvailableActions;
  std::string user;
  try {
    user = screen_context(screen);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  user +=
      "\n\nList every action a user could take on this screen, such as tapping, swiping or entering text. "
      "Write one action per line, each starting with \"- \".";
  auto request = zero_shot(asset, std::move(user), std::string(sample_kind_name(kind)) + "/" + screen.screen_id(),
                           kGenerationTemperature);
  auto answer = query_with_reprompt(std::move(request), kind,
                                    [](const std::string& c) { return parse_free_answer(c); }, kDescriptionReminder);
  return make_sample(kind, screen, screen.screen_id() + ":" + std::string(sample_kind_name(kind)),
                     {{std::string(kAvailableActionsQuestion), std::move(answer)}}, asset.provenance());
}

Sample SampleGenerator::generate_outcome_prediction(const Transition& transition, const PromptAsset& asset) {
  constexpr auto kind = SampleKind::kOutcomePrediction;
  const UIElement* tapped = nullptr;
  try {
    tapped = &require_tapped(transition);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  auto user = transition_prompt(
      transition, *tapped,
      "Write a single question-answer pair. The question asks what will happen after tapping the element above; "
      "the answer is a concise description of the screen shown after the tap. Reply with one line starting with "
      "\"Question:\" and one line starting with \"Answer:\".");
  const auto key = transition_key(transition);
  auto request = zero_shot(asset, std::move(user), std::string(sample_kind_name(kind)) + "/" + key,
                           kGenerationTemperature);
  auto pair = query_with_reprompt(std::move(request), kind, first_pair, kQaFormatReminder);
  auto sample = make_sample(kind, transition.from_screen, key + ":" + std::string(sample_kind_name(kind)),
                            {std::move(pair)}, asset.provenance());
  sample.target_screen_id = transition.to_screen.screen_id();
  return sample;
}

Sample SampleGenerator::generate_element_selection(const Transition& transition, const PromptAsset& asset) {
  constexpr auto kind = SampleKind::kElementSelection;
  const UIElement* tapped = nullptr;
  try {
    tapped = &require_tapped(transition);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  auto user = transition_prompt(
      transition, *tapped,
      "Write a single question-answer pair. The question states a goal that the screen shown after the tap "
      "fulfils, without mentioning anything that only appears on that screen, and asks which element to tap. "
      "The answer names the tapped element. Reply with one line starting with \"Question:\" and one line "
      "starting with \"Answer:\".");
  const auto key = transition_key(transition);
  auto request = zero_shot(asset, std::move(user), std::string(sample_kind_name(kind)) + "/" + key,
                           kGenerationTemperature);
  const UIElement element = *tapped;
  auto pair = query_with_reprompt(
      std::move(request), kind,
      [&element](const std::string& c) {
        auto p = first_pair(c);
        if (!answer_mentions_element(p.answer, element)) {
          throw GuardRejected("answer does not name the tapped element");
        }
        return p;
      },
      kSelectionReminder);
  auto sample = make_sample(kind, transition.from_screen, key + ":" + std::string(sample_kind_name(kind)),
                            {std::move(pair)}, asset.provenance());
  sample.target_screen_id = transition.to_screen.screen_id();
  return sample;
}

Sample SampleGenerator::generate_goal_plan(const Screen& screen, const PromptAsset& asset) {
  constexpr auto kind = SampleKind::kGoalPlan;
  std::string context;
  try {
    require_few_shot(asset);
    context = screen_context(screen);
  } catch (const PreconditionViolation&) {
    ++counters(kind).skipped;
    throw;
  }
  auto request = build_few_shot_request(asset, std::move(context),
                                        std::string(sample_kind_name(kind)) + "/" + screen.screen_id(),
                                        kGenerationTemperature);
  auto pair = query_with_reprompt(std::move(request), kind, first_pair, kQaFormatReminder);
  return make_sample(kind, screen, screen.screen_id() + ":" + std::string(sample_kind_name(kind)), {std::move(pair)},
                     asset.provenance());
}

}  // namespace uiinstruct
