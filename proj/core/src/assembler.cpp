// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include "uiinstruct/assembler.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/text.hpp"

namespace uiinstruct {
namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::string_view, kMixCategoryCount> kCategoryNames = {
    "conversation", "concise", "detailed", "goal_plan", "available_actions", "transition",
};

std::size_t idx(SampleKind k) { return static_cast<std::size_t>(k); }

int parse_ratio(std::string_view text) {
  text = text::trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("mix ratio '" + std::string(text) + "' is not an integer");
  }
  return value;
}

std::optional<MixCategory> category_named(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (text::iequals(name, kCategoryNames[i])) return static_cast<MixCategory>(i);
  }
  // Sample kind names are accepted as aliases.
  if (auto kind = parse_sample_kind(name)) {
    if (*kind == SampleKind::kOutcomePrediction || *kind == SampleKind::kElementSelection) return std::nullopt;
    return mix_category_of(*kind);
  }
  return std::nullopt;
}

// Largest-remainder apportionment of `size` over `weights`; ties go to the
// lower index.
std::vector<int> apportion(int size, const std::vector<int>& weights) {
  const std::int64_t total = std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
  std::vector<int> out(weights.size(), 0);
  if (total == 0) return out;
  std::vector<std::int64_t> rem(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::int64_t num = static_cast<std::int64_t>(size) * weights[i];
    out[i] = static_cast<int>(num / total);
    rem[i] = num % total;
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < size; ++k, ++assigned) ++out[order[k]];
  return out;
}

std::string turn_with_image(const std::string& question, bool image_first) {
  std::string out;
  if (image_first) {
    out.append(kImageToken).append("\n").append(question);
  } else {
    out.append(question).append("\n").append(kImageToken);
  }
  return out;
}

std::size_t count_tokens(std::string_view haystack) {
  std::size_t n = 0;
  for (auto pos = haystack.find(kImageToken); pos != std::string_view::npos;
       pos = haystack.find(kImageToken, pos + kImageToken.size())) {
    ++n;
  }
  return n;
}

std::vector<Sample> dedupe(const std::vector<Sample>& samples, std::array<KindSelection, 7>& per_kind) {
  std::vector<const Sample*> sorted;
  sorted.reserve(samples.size());
  for (const auto& s : samples) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](const Sample* a, const Sample* b) { return a->sample_id < b->sample_id; });
  std::set<std::string> seen;
  std::set<std::string> ids;
  std::vector<Sample> out;
  for (const auto* s : sorted) {
    if (!ids.insert(s->sample_id).second) throw std::invalid_argument("duplicate sample id " + s->sample_id);
    auto& k = per_kind[idx(s->kind)];
    ++k.available;
    if (!seen.insert(dedup_key(*s)).second) {
      ++k.duplicates;
      continue;
    }
    out.push_back(*s);
  }
  return out;
}

}  // namespace

TrainingRecord sequence_sample(const Sample& sample, Rng& rng) {
  if (sample.turns.empty()) throw std::invalid_argument("sample " + sample.sample_id + " has no turns");
  TrainingRecord record;
  record.record_id = sample.sample_id;
  record.image_ref = sample.image_ref;
  record.kind = sample.kind;
  record.screen_id = sample.screen_id;
  record.target_screen_id = sample.target_screen_id;
  record.provenance = sample.provenance;
  const bool image_first = rng.coin();
  for (std::size_t i = 0; i < sample.turns.size(); ++i) {
    const auto& turn = sample.turns[i];
    record.conversation.push_back({"human", i == 0 ? turn_with_image(turn.question, image_first) : turn.question});
    record.conversation.push_back({"assistant", turn.answer});
  }
  return record;
}

void validate_record(const TrainingRecord& record) {
  const auto fail = [&](const std::string& why) { throw ValidationError("record " + record.record_id + ": " + why); };
  if (record.conversation.empty()) fail("empty conversation");
  if (record.conversation.size() % 2 != 0) fail("conversation does not end with an assistant turn");
  for (std::size_t i = 0; i < record.conversation.size(); ++i) {
    const auto& turn = record.conversation[i];
    if (turn.from != (i % 2 == 0 ? "human" : "assistant")) fail("roles do not alternate at turn " + std::to_string(i));
    const auto tokens = count_tokens(turn.value);
    if (i == 0 && tokens != 1) fail("first turn must hold exactly one image token");
    if (i != 0 && tokens != 0) fail("image token outside the first turn");
  }
}

ojson record_to_json(const TrainingRecord& record) {
  ojson conv = ojson::array();
  for (const auto& t : record.conversation) conv.push_back({{"from", t.from}, {"value", t.value}});
  ojson prov = {{"backend", record.provenance.backend_id},
                {"prompt_asset", record.provenance.prompt_asset},
                {"timestamp", record.provenance.timestamp},
                {"screen_id", record.screen_id}};
  if (record.target_screen_id) prov["target_screen_id"] = *record.target_screen_id;
  return {{"id", record.record_id},
          {"image", record.image_ref},
          {"conversations", std::move(conv)},
          {"kind", sample_kind_name(record.kind)},
          {"provenance", std::move(prov)}};
}

TrainingRecord record_from_json(const nlohmann::json& j) {
  TrainingRecord r;
  try {
    r.record_id = j.at("id").get<std::string>();
    r.image_ref = j.at("image").get<std::string>();
    for (const auto& t : j.at("conversations")) {
      r.conversation.push_back({t.at("from").get<std::string>(), t.at("value").get<std::string>()});
    }
    const auto kind_name = j.at("kind").get<std::string>();
    const auto kind = parse_sample_kind(kind_name);
    if (!kind) throw ValidationError("unknown kind " + kind_name);
    r.kind = *kind;
    const auto& p = j.at("provenance");
    r.provenance = {p.at("backend").get<std::string>(), p.at("prompt_asset").get<std::string>(),
                    p.at("timestamp").get<std::string>()};
    r.screen_id = p.at("screen_id").get<std::string>();
    if (p.contains("target_screen_id")) r.target_screen_id = p.at("target_screen_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed record: ") + e.what());
  }
  return r;
}

std::string_view mix_category_name(MixCategory c) noexcept { return kCategoryNames[static_cast<std::size_t>(c)]; }

MixCategory mix_category_of(SampleKind kind) noexcept {
  switch (kind) {
    case SampleKind::kConversation: return MixCategory::kConversation;
    case SampleKind::kConciseDescription: return MixCategory::kConcise;
    case SampleKind::kDetailedDescription: return MixCategory::kDetailed;
    case SampleKind::kGoalPlan: return MixCategory::kGoalPlan;
    case SampleKind::kAvailableActions: return MixCategory::kAvailableActions;
    case SampleKind::kOutcomePrediction:
    case SampleKind::kElementSelection: return MixCategory::kTransition;
  }
  return MixCategory::kConversation;
}

MixPlan MixPlan::parse(std::string_view spec) {
  MixPlan plan;
  spec = text::trim(spec);
  if (spec.find('=') != std::string_view::npos) {
    plan.ratios.fill(0);
    std::set<std::size_t> given;
    std::string_view rest = spec;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto entry = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = entry.find('=');
      if (eq == std::string_view::npos) throw std::invalid_argument("mix entry '" + std::string(entry) + "' lacks '='");
      const auto name = text::trim(entry.substr(0, eq));
      const auto category = category_named(name);
      if (!category) throw std::invalid_argument("unknown mix category '" + std::string(name) + "'");
      const auto i = static_cast<std::size_t>(*category);
      if (!given.insert(i).second) throw std::invalid_argument("mix category '" + std::string(name) + "' repeated");
      plan.ratios[i] = parse_ratio(entry.substr(eq + 1));
    }
  } else {
    std::vector<std::string_view> parts;
    std::string_view rest = spec;
    for (;;) {
      const auto colon = rest.find(':');
      parts.push_back(rest.substr(0, colon));
      if (colon == std::string_view::npos) break;
      rest.remove_prefix(colon + 1);
    }
    if (parts.size() != kMixCategoryCount) {
      throw std::invalid_argument("mix '" + std::string(spec) + "' needs " + std::to_string(kMixCategoryCount) +
                                  " colon-separated ratios");
    }
    for (std::size_t i = 0; i < parts.size(); ++i) plan.ratios[i] = parse_ratio(parts[i]);
  }
  plan.validate();
  return plan;
}

std::string MixPlan::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (i) out += ':';
    out += std::to_string(ratios[i]);
  }
  return out;
}

void MixPlan::validate() const {
  bool any = false;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] < 0) {
      throw std::invalid_argument("mix ratio for " + std::string(kCategoryNames[i]) + " is negative");
    }
    any = any || ratios[i] > 0;
  }
  if (!any) throw std::invalid_argument("mix plan has no positive ratio");
}

std::array<int, kAllSampleKinds.size()> MixPlan::targets(int size) const {
  if (size < 0) throw std::invalid_argument("corpus size must be non-negative");
  validate();
  const auto shares = apportion(size, std::vector<int>(ratios.begin(), ratios.end()));
  std::array<int, kAllSampleKinds.size()> out{};
  for (auto kind : kAllSampleKinds) {
    if (kind == SampleKind::kOutcomePrediction || kind == SampleKind::kElementSelection) continue;
    out[idx(kind)] = shares[static_cast<std::size_t>(mix_category_of(kind))];
  }
  const int transition = shares[static_cast<std::size_t>(MixCategory::kTransition)];
  out[idx(SampleKind::kOutcomePrediction)] = transition - transition / 2;
  out[idx(SampleKind::kElementSelection)] = transition / 2;
  return out;
}

std::string dedup_key(const Sample& sample) {
  std::string key = sample.screen_id;
  key += '\x1f';
  key += sample_kind_name(sample.kind);
  key += '\x1f';
  if (!sample.turns.empty()) key += text::normalize(sample.turns.front().question);
  // Transition samples are distinct per destination screen.
  if (sample.target_screen_id) {
    key += '\x1f';
    key += *sample.target_screen_id;
  }
  return key;
}

Selection select_mix(const std::vector<Sample>& samples, const MixPlan& plan, int size, std::uint64_t seed,
                     const std::vector<SampleKind>& waived) {
  Selection result;
  auto unique = dedupe(samples, result.per_kind);
  const auto targets = plan.targets(size);

  std::array<std::vector<Sample>, kAllSampleKinds.size()> pools;
  for (auto& s : unique) pools[idx(s.kind)].push_back(std::move(s));
  for (auto kind : kAllSampleKinds) {
    auto& pool = pools[idx(kind)];
    auto rng = Rng::derive(seed, "mix", sample_kind_name(kind));
    rng.shuffle(std::span<Sample>(pool));
    result.per_kind[idx(kind)].target = targets[idx(kind)];
  }

  std::array<int, kAllSampleKinds.size()> take{};
  for (auto kind : kAllSampleKinds) {
    take[idx(kind)] = std::min<int>(targets[idx(kind)], static_cast<int>(pools[idx(kind)].size()));
  }
  // The two transition kinds share one category budget.
  const auto op = idx(SampleKind::kOutcomePrediction);
  const auto es = idx(SampleKind::kElementSelection);
  for (auto [short_k, long_k] : {std::pair{op, es}, std::pair{es, op}}) {
    const int missing = targets[short_k] - take[short_k];
    const int spare = static_cast<int>(pools[long_k].size()) - take[long_k];
    const int moved = std::max(0, std::min(missing, spare));
    take[long_k] += moved;
    result.per_kind[short_k].target -= moved;
    result.per_kind[long_k].target += moved;
  }

  std::vector<std::string> short_kinds;
  for (auto kind : kAllSampleKinds) {
    const auto i = idx(kind);
    if (take[i] < result.per_kind[i].target &&
        std::find(waived.begin(), waived.end(), kind) == waived.end()) {
      short_kinds.push_back(std::string(sample_kind_name(kind)) + " needs " + std::to_string(result.per_kind[i].target) +
                            ", has " + std::to_string(take[i]));
    }
  }
  if (!short_kinds.empty()) {
    std::string msg = "insufficient samples: ";
    for (std::size_t i = 0; i < short_kinds.size(); ++i) msg += (i ? "; " : "") + short_kinds[i];
    throw InsufficientSamples(msg);
  }

  for (auto kind : kAllSampleKinds) {
    const auto i = idx(kind);
    auto& pool = pools[i];
    result.per_kind[i].selected = take[i];
    std::move(pool.begin(), pool.begin() + take[i], std::back_inserter(result.samples));
  }
  std::sort(result.samples.begin(), result.samples.end(),
            [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
  return result;
}

int max_feasible_size(const std::vector<Sample>& samples, const MixPlan& plan) {
  std::array<KindSelection, kAllSampleKinds.size()> per_kind{};
  const auto unique = dedupe(samples, per_kind);
  std::array<int, kAllSampleKinds.size()> avail{};
  for (const auto& s : unique) ++avail[idx(s.kind)];
  auto fits = [&](int size) {
    const auto t = plan.targets(size);
    for (auto kind : kAllSampleKinds) {
      if (kind == SampleKind::kOutcomePrediction || kind == SampleKind::kElementSelection) continue;
      if (t[idx(kind)] > avail[idx(kind)]) return false;
    }
    const auto op = idx(SampleKind::kOutcomePrediction);
    const auto es = idx(SampleKind::kElementSelection);
    return t[op] + t[es] <= avail[op] + avail[es];
  };
  int lo = 0;
  int hi = static_cast<int>(unique.size());
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (fits(mid)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

CorpusStats assemble_corpus(const std::vector<Sample>& samples, const GenerationStats& generation,
                            const AssemblyOptions& options) {
  if (options.preprocess.target_side <= 0) throw std::invalid_argument("target side must be positive");
  const int size = options.size > 0 ? options.size : max_feasible_size(samples, options.plan);
  auto selection = select_mix(samples, options.plan, size, options.seed, options.waived);

  std::vector<TrainingRecord> records;
  records.reserve(selection.samples.size());
  for (const auto& sample : selection.samples) {
    auto rng = Rng::derive(options.seed, sample.sample_id, "placement");
    records.push_back(sequence_sample(sample, rng));
    validate_record(records.back());
  }

  const auto images_dir = options.out_dir / kImagesDirName;
  std::filesystem::create_directories(images_dir);
  std::vector<std::string> sources;
  for (const auto& r : records) sources.push_back(r.image_ref);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());

  std::vector<std::string> emitted(sources.size());
  detail::parallel_for(sources.size(), options.concurrency, [&](std::size_t i) {
    const auto processed = preprocess_image(read_png(sources[i]), options.preprocess);
    const auto png = encode_png(processed.image);
    const auto name = sha256_hex(png) + ".png";
    const auto path = images_dir / name;
    if (!std::filesystem::exists(path)) write_file_bytes(path, png);
    emitted[i] = (std::filesystem::path(kImagesDirName) / name).generic_string();
  });
  std::set<std::string> distinct(emitted.begin(), emitted.end());
  for (auto& r : records) {
    const auto it = std::lower_bound(sources.begin(), sources.end(), r.image_ref);
    r.image_ref = emitted[static_cast<std::size_t>(it - sources.begin())];
  }

  {
    std::ofstream out(options.out_dir / kCorpusFileName, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (options.out_dir / kCorpusFileName).string());
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
    if (!out.flush()) throw std::runtime_error("write failed for " + (options.out_dir / kCorpusFileName).string());
  }

  CorpusStats stats;
  stats.size = size;
  stats.records = static_cast<int>(records.size());
  stats.images = static_cast<int>(distinct.size());
  stats.generation = generation;
  for (auto kind : kAllSampleKinds) {
    stats.per_kind[idx(kind)] = {selection.per_kind[idx(kind)], generation.of(kind)};
  }
  {
    std::ofstream out(options.out_dir / kStatsJsonName, std::ios::binary | std::ios::trunc);
    out << stats_to_json(stats).dump(2) << '\n';
  }
  {
    std::ofstream out(options.out_dir / kStatsTableName, std::ios::binary | std::ios::trunc);
    out << render_stats_table(stats);
  }
  spdlog::info("wrote {} records and {} images to {}", stats.records, stats.images, options.out_dir.string());
  return stats;
}

std::string render_stats_table(const CorpusStats& stats) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %9s %6s %6s %8s %8s %7s %6s %7s\n", "kind", "available", "dups", "target",
                "selected", "dropped", "parsefl", "guard", "skipped");
  out << line;
  std::array<int, 8> totals{};
  for (auto kind : kAllSampleKinds) {
    const auto& k = stats.of(kind);
    const std::array<int, 8> row = {k.selection.available,      k.selection.duplicates,  k.selection.target,
                                    k.selection.selected,       k.generation.dropped,    k.generation.parse_failures,
                                    k.generation.guard_rejections, k.generation.skipped};
    for (std::size_t i = 0; i < row.size(); ++i) totals[i] += row[i];
    std::snprintf(line, sizeof line, "%-22s %9d %6d %6d %8d %8d %7d %6d %7d\n",
                  std::string(sample_kind_name(kind)).c_str(), row[0], row[1], row[2], row[3], row[4], row[5], row[6],
                  row[7]);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-22s %9d %6d %6d %8d %8d %7d %6d %7d\n", "total", totals[0], totals[1],
                totals[2], totals[3], totals[4], totals[5], totals[6], totals[7]);
  out << line;
  out << "records " << stats.records << ", images " << stats.images << ", screens " << stats.generation.screens
      << ", caption failures " << stats.generation.caption_failures << ", unresolved taps "
      << stats.generation.unresolved_taps << "\n";
  return out.str();
}

ojson stats_to_json(const CorpusStats& stats) {
  ojson kinds = ojson::object();
  for (auto kind : kAllSampleKinds) {
    const auto& k = stats.of(kind);
    kinds[std::string(sample_kind_name(kind))] = {
        {"available", k.selection.available},       {"duplicates", k.selection.duplicates},
        {"target", k.selection.target},             {"selected", k.selection.selected},
        {"generated", k.generation.generated},      {"dropped", k.generation.dropped},
        {"parse_failures", k.generation.parse_failures}, {"guard_rejections", k.generation.guard_rejections},
        {"skipped", k.generation.skipped},
    };
  }
  const auto& g = stats.generation;
  return {{"size", stats.size},
          {"records", stats.records},
          {"images", stats.images},
          {"kinds", std::move(kinds)},
          {"generation",
           {{"screens", g.screens},
            {"screens_without_elements", g.screens_without_elements},
            {"caption_failures", g.caption_failures},
            {"unresolved_taps", g.unresolved_taps},
            {"unknown_transition_screens", g.unknown_transition_screens}}}};
}

}  // namespace uiinstruct
