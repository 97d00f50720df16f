// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "uiinstruct/datagen.hpp"
#include "uiinstruct/errors.hpp"

namespace uiinstruct {
namespace {

struct Job {
  SampleKind kind;
  std::function<Sample()> run;
};

}  // namespace

GenerationResult run_generation(const std::vector<Screen>& screens, const std::vector<TransitionSpec>& transitions,
                                const PromptAssets& assets, LlmGateway& gateway, const GenerationOptions& options) {
  if (options.concurrency < 1) throw std::invalid_argument("concurrency must be at least 1");

  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < screens.size(); ++i) {
    if (!index.emplace(screens[i].screen_id(), i).second) {
      throw std::invalid_argument("duplicate screen id " + screens[i].screen_id());
    }
  }
  auto wants = [&](SampleKind kind) {
    return std::find(options.kinds.begin(), options.kinds.end(), kind) != options.kinds.end();
  };

  GenerationResult result;
  result.screens = screens;
  result.stats.screens = static_cast<int>(screens.size());
  SampleGenerator gen(gateway, options.timestamp);

  // Captions first: every other generator reads them.
  std::vector<char> captioned(screens.size(), 0);
  std::atomic<int> empty_screens{0};
  detail::parallel_for(screens.size(), options.concurrency, [&](std::size_t i) {
    const auto& screen = screens[i];
    if (screen.elements().empty()) {
      ++empty_screens;
      spdlog::warn("screen {} has no UI elements; skipped", screen.screen_id());
      return;
    }
    try {
      result.screens[i] = screen.with_caption(gen.generate_caption(screen));
      captioned[i] = 1;
    } catch (const Error& e) {
      spdlog::warn("caption for {} failed: {}", screen.screen_id(), e.what());
    }
  });
  result.stats.screens_without_elements = empty_screens.load();

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < screens.size(); ++i) {
    if (!captioned[i]) continue;
    const Screen* s = &result.screens[i];
    if (wants(SampleKind::kConciseDescription)) {
      jobs.push_back({SampleKind::kConciseDescription, [&gen, s] { return gen.concise_description(*s); }});
    }
    if (wants(SampleKind::kConversation)) {
      jobs.push_back({SampleKind::kConversation, [&, s] { return gen.generate_conversation(*s, assets.conversation); }});
    }
    if (wants(SampleKind::kDetailedDescription)) {
      jobs.push_back({SampleKind::kDetailedDescription, [&, s] {
                        auto rng = Rng::derive(options.seed, s->screen_id(), "detailed_description");
                        return gen.generate_detailed_description(*s, assets.detailed_description, rng);
                      }});
    }
    if (wants(SampleKind::kAvailableActions)) {
      jobs.push_back(
          {SampleKind::kAvailableActions, [&, s] { return gen.generate_available_actions(*s, assets.available_actions); }});
    }
    if (wants(SampleKind::kGoalPlan)) {
      jobs.push_back({SampleKind::kGoalPlan, [&, s] { return gen.generate_goal_plan(*s, assets.goal_plan); }});
    }
  }

  const bool wants_transitions = wants(SampleKind::kOutcomePrediction) || wants(SampleKind::kElementSelection);
  std::vector<Transition> resolved;
  resolved.reserve(transitions.size());
  for (const auto& spec : transitions) {
    if (!wants_transitions) break;
    auto from = index.find(spec.from);
    auto to = index.find(spec.to);
    if (from == index.end() || to == index.end()) {
      ++result.stats.unknown_transition_screens;
      spdlog::warn("transition {} -> {} names an unknown screen", spec.from, spec.to);
      continue;
    }
    try {
      resolved.push_back(resolve_transition(
          Transition{result.screens[from->second], result.screens[to->second], spec.tap, std::nullopt}));
    } catch (const NoContainingElement& e) {
      ++result.stats.unresolved_taps;
      spdlog::warn("transition {} -> {}: {}", spec.from, spec.to, e.what());
    }
  }
  for (const auto& t : resolved) {
    const Transition* tp = &t;
    if (wants(SampleKind::kOutcomePrediction)) {
      jobs.push_back({SampleKind::kOutcomePrediction,
                      [&, tp] { return gen.generate_outcome_prediction(*tp, assets.outcome_prediction); }});
    }
    if (wants(SampleKind::kElementSelection)) {
      jobs.push_back({SampleKind::kElementSelection,
                      [&, tp] { return gen.generate_element_selection(*tp, assets.element_selection); }});
    }
  }

  std::vector<std::optional<Sample>> produced(jobs.size());
  detail::parallel_for(jobs.size(), options.concurrency, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      produced[i] = job.run();
    } catch (const DroppedSample& e) {
      spdlog::warn("{}", e.what());
    } catch (const PreconditionViolation& e) {
      spdlog::warn("{} skipped: {}", sample_kind_name(job.kind), e.what());
    } catch (const Error& e) {
      ++gen.counters(job.kind).dropped;
      spdlog::warn("{} dropped: {}", sample_kind_name(job.kind), e.what());
    }
  });

  for (auto& sample : produced) {
    if (sample) result.samples.push_back(std::move(*sample));
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });

  for (auto kind : kAllSampleKinds) {
    const auto& c = gen.counters(kind);
    result.stats.per_kind[static_cast<std::size_t>(kind)] = {c.generated.load(), c.dropped.load(),
                                                              c.parse_failures.load(), c.guard_rejections.load(),
                                                              c.skipped.load()};
  }
  result.stats.caption_failures = gen.caption_failures();
  return result;
}

}  // namespace uiinstruct
