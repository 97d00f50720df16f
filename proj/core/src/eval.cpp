// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/format.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

using ojson = nlohmann::ordered_json;

std::string folded(std::string_view s) { return text::to_lower(text::trim(s)); }

bool has_subtype(const UIElement& e) { return e.icon_subtype && !text::trim(*e.icon_subtype).empty(); }

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

struct TypeName {
  std::vector<std::string> words;
  ElementType type;
};

std::vector<TypeName> build_type_names() {
  std::vector<TypeName> names;
  for (auto type : kBenchmarkTypes) names.push_back({words_of(canonical_name(type)), type});
  const std::pair<std::string_view, ElementType> aliases[] = {
      {"image", ElementType::kPicture},           {"textfield", ElementType::kTextField},
      {"check box", ElementType::kCheckbox},      {"switch", ElementType::kToggle},
      {"pagecontrol", ElementType::kPageControl}, {"segmentedcontrol", ElementType::kSegmentedControl},
  };
  for (const auto& [alias, type] : aliases) names.push_back({words_of(alias), type});
  std::stable_sort(names.begin(), names.end(),
                   [](const TypeName& a, const TypeName& b) { return a.words.size() > b.words.size(); });
  return names;
}

nlohmann::ordered_json element_to_json(const UIElement& e) {
  ojson j = {{"type", canonical_name(e.type)}};
  if (e.text) j["text"] = *e.text;
  if (e.icon_subtype) j["iconType"] = *e.icon_subtype;
  j["box"] = {e.box.x1(), e.box.y1(), e.box.x2(), e.box.y2()};
  j["ordinal"] = e.ordinal;
  return j;
}

UIElement element_from_json(const nlohmann::json& j) {
  UIElement e;
  const auto type_name = j.at("type").get<std::string>();
  const auto type = parse_element_type(type_name);
  if (!type) throw ValidationError("unknown element type " + type_name);
  e.type = *type;
  if (j.contains("text")) e.text = j.at("text").get<std::string>();
  if (j.contains("iconType")) e.icon_subtype = j.at("iconType").get<std::string>();
  const auto& b = j.at("box");
  e.box = BoundingBox(b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>());
  e.ordinal = j.value("ordinal", 0);
  return e;
}

std::string substitute(std::string_view tmpl, std::string_view key, std::string_view value) {
  std::string out(tmpl);
  text::replace_all(out, key, value);
  return out;
}

template <typename Item>
void write_outcomes(const std::filesystem::path& path, const std::vector<Item>& items,
                    const std::vector<std::optional<ItemOutcome>>& outcomes) {
  std::vector<const ItemOutcome*> done;
  for (const auto& o : outcomes) {
    if (o) done.push_back(&*o);
  }
  std::sort(done.begin(), done.end(), [](const auto* a, const auto* b) { return a->item_id < b->item_id; });
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto* o : done) {
    out << ojson{{"item_id", o->item_id}, {"reply", o->reply}, {"judged", o->judged}, {"correct", o->correct}}.dump()
        << '\n';
  }
  spdlog::info("wrote {} of {} outcomes to {}", done.size(), items.size(), path.string());
}

// Runs `ask` over every item, saving outcomes on abort.
template <typename Item, typename Ask>
std::vector<ItemOutcome> run_items(const std::vector<Item>& items, const BenchmarkRunOptions& options, Ask ask) {
  std::vector<std::optional<ItemOutcome>> outcomes(items.size());
  try {
    detail::parallel_for(items.size(), options.concurrency, [&](std::size_t i) { outcomes[i] = ask(items[i]); });
  } catch (const EndpointUnavailable& e) {
    const auto saved = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.has_value(); });
    if (options.results_path) write_outcomes(*options.results_path, items, outcomes);
    throw EndpointUnavailable(std::string(e.what()) + " (" + std::to_string(saved) + " of " +
                              std::to_string(items.size()) + " items answered before the abort)");
  }
  if (options.results_path) write_outcomes(*options.results_path, items, outcomes);
  std::vector<ItemOutcome> out;
  out.reserve(items.size());
  for (auto& o : outcomes) out.push_back(std::move(*o));
  return out;
}

}  // namespace

bool elements_match(const UIElement& probe, const UIElement& candidate) {
  if (probe.type != candidate.type) return false;
  const bool probe_sub = has_subtype(probe);
  if (!probe_sub && !probe.has_text()) return true;
  if (probe_sub && has_subtype(candidate) && folded(*probe.icon_subtype) == folded(*candidate.icon_subtype)) {
    return true;
  }
  return probe.has_text() && candidate.has_text() && folded(*probe.text) == folded(*candidate.text);
}

bool screen_has_match(const Screen& screen, const UIElement& probe) {
  return std::any_of(screen.elements().begin(), screen.elements().end(),
                     [&](const UIElement& e) { return elements_match(probe, e); });
}

std::vector<ExistenceItem> build_existence_benchmark(const std::vector<Screen>& screens, Rng& rng,
                                                     const ExistenceBenchmarkOptions& options) {
  if (options.per_screen <= 0) throw std::invalid_argument("per_screen must be positive");
  if (screens.size() < 2) {
    throw CorpusTooSmall("existence benchmark needs at least two screens, got " + std::to_string(screens.size()));
  }
  const auto per = static_cast<std::size_t>(options.per_screen);
  std::vector<ExistenceItem> items;
  for (std::size_t s = 0; s < screens.size(); ++s) {
    const auto& screen = screens[s];
    const auto& elements = screen.elements();
    if (elements.size() < per) {
      spdlog::warn("screen {} has {} elements, fewer than {}; skipped", screen.screen_id(), elements.size(), per);
      continue;
    }
    std::vector<std::size_t> order(elements.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k = 0; k < per; ++k) {
      const auto& e = elements[order[k]];
      items.push_back({screen.screen_id() + ":pos:" + std::to_string(k), screen.screen_id(), screen.image_ref(),
                       describe_element(e), e, ExistenceLabel::kPositive, screen.screen_id()});
    }

    std::set<std::string> used;
    std::size_t negatives = 0;
    const auto max_draws = per * static_cast<std::size_t>(std::max(options.max_draws_per_negative, 1));
    for (std::size_t draw = 0; negatives < per && draw < max_draws; ++draw) {
      auto other = static_cast<std::size_t>(rng.uniform(screens.size() - 1));
      if (other >= s) ++other;
      const auto& source = screens[other];
      if (source.elements().empty()) continue;
      const auto& e = source.elements()[static_cast<std::size_t>(rng.uniform(source.elements().size()))];
      auto probe = describe_element(e);
      if (used.contains(probe) || screen_has_match(screen, e)) continue;
      used.insert(probe);
      items.push_back({screen.screen_id() + ":neg:" + std::to_string(negatives), screen.screen_id(),
                       screen.image_ref(), std::move(probe), e, ExistenceLabel::kNegative, source.screen_id()});
      ++negatives;
    }
    if (negatives < per) {
      spdlog::warn("screen {}: only {} of {} negatives survived the matching check", screen.screen_id(), negatives,
                   per);
    }
  }
  if (items.empty()) throw CorpusTooSmall("no screen has enough elements for the existence benchmark");
  return items;
}

std::vector<TypeItem> build_type_benchmark(const std::vector<Screen>& screens, Rng& rng, int per_screen) {
  if (per_screen <= 0) throw std::invalid_argument("per_screen must be positive");
  std::vector<TypeItem> items;
  for (const auto& screen : screens) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < screen.elements().size(); ++i) {
      if (is_benchmark_type(screen.elements()[i].type)) eligible.push_back(i);
    }
    if (eligible.empty()) {
      spdlog::warn("screen {} has no element with a type in the answer set; skipped", screen.screen_id());
      continue;
    }
    rng.shuffle(std::span<std::size_t>(eligible));
    const auto take = std::min(eligible.size(), static_cast<std::size_t>(per_screen));
    for (std::size_t k = 0; k < take; ++k) {
      const auto& e = screen.elements()[eligible[k]];
      std::vector<ElementType> options(kBenchmarkTypes.begin(), kBenchmarkTypes.end());
      rng.shuffle(std::span<ElementType>(options));
      items.push_back({screen.screen_id() + ":type:" + std::to_string(k), screen.screen_id(), screen.image_ref(),
                       describe_element_untyped(e), e, std::move(options), e.type});
    }
  }
  if (items.empty()) throw CorpusTooSmall("no screen yields a type benchmark item");
  return items;
}

std::string existence_question(const ExistenceItem& item, std::string_view tmpl) {
  return substitute(tmpl, "{element}", item.probe);
}

std::string type_question(const TypeItem& item, std::string_view tmpl) {
  std::string options;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    if (i) options += ", ";
    options += display_name(item.options[i]);
  }
  return substitute(substitute(tmpl, "{element}", item.probe), "{options}", options);
}

ojson to_json(const ExistenceItem& item) {
  return {{"item_id", item.item_id},
          {"screen_id", item.screen_id},
          {"image", item.image_ref},
          {"probe", item.probe},
          {"element", element_to_json(item.probe_element)},
          {"label", item.label == ExistenceLabel::kPositive ? "positive" : "negative"},
          {"source_screen_id", item.source_screen_id}};
}

ojson to_json(const TypeItem& item) {
  ojson options = ojson::array();
  for (auto t : item.options) options.push_back(canonical_name(t));
  return {{"item_id", item.item_id},
          {"screen_id", item.screen_id},
          {"image", item.image_ref},
          {"probe", item.probe},
          {"element", element_to_json(item.probe_element)},
          {"options", std::move(options)},
          {"answer", canonical_name(item.answer)}};
}

ExistenceItem existence_item_from_json(const nlohmann::json& j) {
  try {
    ExistenceItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.screen_id = j.at("screen_id").get<std::string>();
    item.image_ref = j.at("image").get<std::string>();
    item.probe = j.at("probe").get<std::string>();
    item.probe_element = element_from_json(j.at("element"));
    const auto label = j.at("label").get<std::string>();
    if (label != "positive" && label != "negative") throw ValidationError("bad label " + label);
    item.label = label == "positive" ? ExistenceLabel::kPositive : ExistenceLabel::kNegative;
    item.source_screen_id = j.at("source_screen_id").get<std::string>();
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed existence item: ") + e.what());
  }
}

TypeItem type_item_from_json(const nlohmann::json& j) {
  try {
    TypeItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.screen_id = j.at("screen_id").get<std::string>();
    item.image_ref = j.at("image").get<std::string>();
    item.probe = j.at("probe").get<std::string>();
    item.probe_element = element_from_json(j.at("element"));
    auto parse = [](const std::string& name) {
      const auto t = parse_element_type(name);
      if (!t || !is_benchmark_type(*t)) throw ValidationError("bad type option " + name);
      return *t;
    };
    for (const auto& o : j.at("options")) item.options.push_back(parse(o.get<std::string>()));
    item.answer = parse(j.at("answer").get<std::string>());
    return item;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed type item: ") + e.what());
  }
}

std::optional<bool> judge_yes_no(std::string_view reply) {
  bool yes = false;
  bool no = false;
  for (const auto& w : words_of(reply)) {
    yes = yes || w == "yes";
    no = no || w == "no";
  }
  if (yes == no) return std::nullopt;
  return yes;
}

std::optional<ElementType> judge_type(std::string_view reply) {
  static const auto names = build_type_names();
  const auto words = words_of(reply);
  std::optional<ElementType> found;
  for (std::size_t i = 0; i < words.size();) {
    const TypeName* hit = nullptr;
    for (const auto& name : names) {
      if (i + name.words.size() <= words.size() &&
          std::equal(name.words.begin(), name.words.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) {
        hit = &name;
        break;
      }
    }
    if (hit == nullptr) {
      ++i;
      continue;
    }
    if (found && *found != hit->type) return std::nullopt;
    found = hit->type;
    i += hit->words.size();
  }
  return found;
}

MetricsReport metrics_from_confusion(const Confusion& c) {
  MetricsReport r;
  r.confusion = c;
  r.items = static_cast<int>(c.total());
  const auto ratio = [](std::int64_t num, std::int64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

ojson to_json(const MetricsReport& report) {
  ojson j = {{"items", report.items},
             {"unparseable", report.unparseable},
             {"accuracy", report.accuracy},
             {"precision", report.precision},
             {"recall", report.recall},
             {"f1", report.f1},
             {"confusion",
              {{"tp", report.confusion.tp},
               {"fp", report.confusion.fp},
               {"tn", report.confusion.tn},
               {"fn", report.confusion.fn}}}};
  if (!report.per_type.empty()) {
    ojson per = ojson::object();
    for (const auto& [type, tally] : report.per_type) {
      per[std::string(canonical_name(type))] = {
          {"correct", tally.correct}, {"total", tally.total}, {"accuracy", tally.accuracy()}};
    }
    j["per_type"] = std::move(per);
  }
  return j;
}

MetricsReport run_existence_benchmark(const std::vector<ExistenceItem>& items, VisionModelClient& client,
                                      const BenchmarkRunOptions& options, std::vector<ItemOutcome>* outcomes) {
  const std::string tmpl = options.question_template.empty() ? std::string(kDefaultExistenceTemplate)
                                                             : options.question_template;
  auto results = run_items(items, options, [&](const ExistenceItem& item) {
    ItemOutcome o{item.item_id, client.ask({item.image_ref, existence_question(item, tmpl), "existence/" + item.item_id}),
                  "", false};
    const auto verdict = judge_yes_no(o.reply);
    if (verdict) {
      o.judged = *verdict ? "yes" : "no";
      o.correct = *verdict == (item.label == ExistenceLabel::kPositive);
    }
    return o;
  });

  Confusion c;
  int unparseable = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const bool positive = items[i].label == ExistenceLabel::kPositive;
    const auto& o = results[i];
    if (o.judged.empty()) ++unparseable;
    const bool said_yes = o.judged.empty() ? !positive : o.judged == "yes";
    if (positive) {
      said_yes ? ++c.tp : ++c.fn;
    } else {
      said_yes ? ++c.fp : ++c.tn;
    }
  }
  auto report = metrics_from_confusion(c);
  report.unparseable = unparseable;
  if (outcomes) *outcomes = std::move(results);
  return report;
}

MetricsReport run_type_benchmark(const std::vector<TypeItem>& items, VisionModelClient& client,
                                 const BenchmarkRunOptions& options, std::vector<ItemOutcome>* outcomes) {
  const std::string tmpl = options.question_template.empty() ? std::string(kDefaultTypeTemplate)
                                                             : options.question_template;
  auto results = run_items(items, options, [&](const TypeItem& item) {
    ItemOutcome o{item.item_id, client.ask({item.image_ref, type_question(item, tmpl), "type/" + item.item_id}), "",
                  false};
    if (const auto verdict = judge_type(o.reply)) {
      o.judged = canonical_name(*verdict);
      o.correct = *verdict == item.answer;
    }
    return o;
  });

  MetricsReport report;
  int correct = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& tally = report.per_type[items[i].answer];
    ++tally.total;
    if (results[i].correct) {
      ++tally.correct;
      ++correct;
    }
    if (results[i].judged.empty()) ++report.unparseable;
  }
  report.items = static_cast<int>(items.size());
  report.accuracy = items.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(items.size());
  if (outcomes) *outcomes = std::move(results);
  return report;
}

}  // namespace uiinstruct
