// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

// uiinstruct: corpus generation and evaluation front end.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "uiinstruct/assembler.hpp"
#include "uiinstruct/corpus.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/eval.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/rating.hpp"
#include "uiinstruct/text.hpp"

namespace {

using namespace uiinstruct;
using ojson = nlohmann::ordered_json;

RatingService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

std::vector<SampleKind> parse_kind_list(const std::vector<std::string>& names) {
  std::vector<SampleKind> kinds;
  for (const auto& raw : names) {
    std::string_view rest = raw;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto name = text::trim(rest.substr(0, comma));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      if (name.empty()) continue;
      const auto kind = parse_sample_kind(name);
      if (!kind) throw CLI::ValidationError("--waive", "unknown sample kind '" + std::string(name) + "'");
      kinds.push_back(*kind);
    }
  }
  return kinds;
}

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::filesystem::path& path, FromJson from_json) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(from_json(nlohmann::json::parse(line)));
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}

void write_json(const std::filesystem::path& path, const ojson& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct ScreenSourceArgs {
  std::string dir;
  std::string detector;
  double threshold = kDefaultConfidenceThreshold;
  std::string only_ids;

  void add_to(CLI::App* app) {
    app->add_option("--screens-dir", dir, "Directory of <id>.png screenshots")->required()->check(CLI::ExistingDirectory);
    app->add_option("--detector", detector, "Detection source (default: annotation files in --screens-dir)");
    app->add_option("--threshold", threshold, "Minimum detector confidence")->check(CLI::Range(0.0, 1.0));
    app->add_option("--ids", only_ids, "File listing the screen ids to use, one per line")->check(CLI::ExistingFile);
  }

  std::vector<Screen> load(int concurrency) const {
    const DetectionLoader loader(detector.empty() ? DetectionSource{DetectionSourceKind::kAnnotationFile, dir}
                                                  : DetectionSource::parse(detector));
    auto input = load_corpus_dir(dir, loader, threshold, {}, concurrency);
    if (only_ids.empty()) return std::move(input.screens);
    const auto wanted = read_id_list(only_ids);
    std::vector<Screen> out;
    for (auto& s : input.screens) {
      if (wanted.contains(s.screen_id())) out.push_back(std::move(s));
    }
    return out;
  }
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("uiinstruct"));

  CLI::App app{"Generate UI instruction-tuning corpora and evaluate screen-understanding models"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // generate ------------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Generate a training corpus from annotated screenshots");
  GenerateOptions g;
  std::string corpus_dir, out_dir, backend_spec, mix = "224:32:32:32:32:1", detector, holdout, audit_log, filter;
  std::string prompt_dir = UIINSTRUCT_DEFAULT_PROMPT_DIR;
  std::vector<std::string> waive;
  int max_attempts = 3, max_in_flight = 4, rpm = 0, target_side = 336;
  gen->add_option("--corpus-dir", corpus_dir, "Screenshots (<id>.png), detections and transitions.jsonl")
      ->required()
      ->check(CLI::ExistingDirectory);
  gen->add_option("--out", out_dir, "Output directory for corpus.jsonl, images/ and stats")->required();
  gen->add_option("--seed", g.seed, "Seed for every random choice")->default_val(0);
  gen->add_option("--size", g.size, "Corpus size in records (0: largest the mix allows)")->default_val(0)
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--mix", mix, "conversation:concise:detailed:goal_plan:available_actions:transition ratios")
      ->capture_default_str();
  gen->add_option("--backend", backend_spec, "mock:<script.jsonl> or openai:<url>[#model]")->required();
  gen->add_option("--prompt-assets", prompt_dir, "Directory of <kind>.prompt files")->capture_default_str()
      ->check(CLI::ExistingDirectory);
  gen->add_option("--detector", detector, "annotation:<dir>, command:<template> or http:<url>");
  gen->add_option("--threshold", g.threshold, "Minimum detector confidence")->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--waive", waive, "Sample kinds allowed to fall short of their target (comma list)");
  gen->add_option("--holdout", holdout, "File of screen ids to exclude (evaluation screens)")
      ->check(CLI::ExistingFile);
  gen->add_option("--concurrency", g.concurrency, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--max-attempts", max_attempts, "Attempts per LLM request")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--max-in-flight", max_in_flight, "Concurrent LLM requests (0: unlimited)")->capture_default_str();
  gen->add_option("--requests-per-minute", rpm, "LLM request budget per minute (0: unlimited)")->capture_default_str();
  gen->add_option("--image-side", target_side, "Side of the square training images")->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen->add_option("--resize-filter", filter, "area, bilinear or nearest");
  gen->add_option("--audit-log", audit_log, "Write every LLM exchange to this JSONL file");

  // eval ------------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Benchmarks, model queries and preference rating");
  eval->require_subcommand(1);

  ScreenSourceArgs existence_src;
  std::string existence_out;
  std::uint64_t eval_seed = 0;
  int per_screen = 5;
  int eval_concurrency = 4;
  auto* build_existence = eval->add_subcommand("build-existence", "Build the element existence benchmark");
  existence_src.add_to(build_existence);
  build_existence->add_option("--out", existence_out, "Benchmark JSONL")->required();
  build_existence->add_option("--seed", eval_seed)->default_val(0);
  build_existence->add_option("--per-screen", per_screen)->capture_default_str()->check(CLI::PositiveNumber);

  ScreenSourceArgs type_src;
  std::string type_out;
  auto* build_type = eval->add_subcommand("build-type", "Build the element type benchmark");
  type_src.add_to(build_type);
  build_type->add_option("--out", type_out, "Benchmark JSONL")->required();
  build_type->add_option("--seed", eval_seed)->default_val(0);
  build_type->add_option("--per-screen", per_screen)->capture_default_str()->check(CLI::PositiveNumber);

  std::string run_kind, run_items, run_model, run_report, run_results, run_template;
  auto* run = eval->add_subcommand("run", "Query a model on a benchmark and score it");
  run->add_option("--benchmark", run_kind, "existence or type")->required()
      ->check(CLI::IsMember({"existence", "type"}));
  run->add_option("--items", run_items, "Benchmark JSONL")->required()->check(CLI::ExistingFile);
  run->add_option("--model", run_model, "mock:<script.jsonl> or openai:<url>#<model>")->required();
  run->add_option("--report", run_report, "Metrics JSON output");
  run->add_option("--results", run_results, "Per-item outcomes JSONL");
  run->add_option("--template", run_template, "Question template with {element} (and {options})");
  run->add_option("--concurrency", eval_concurrency)->capture_default_str()->check(CLI::PositiveNumber);

  ScreenSourceArgs describe_src;
  std::string describe_model, describe_out;
  std::string describe_question = "Describe this UI screen.";
  auto* describe = eval->add_subcommand("describe", "Ask a model to describe each screen");
  describe_src.add_to(describe);
  describe->add_option("--model", describe_model, "mock:<script.jsonl> or openai:<url>#<model>")->required();
  describe->add_option("--out", describe_out, "Descriptions JSONL")->required();
  describe->add_option("--question", describe_question)->capture_default_str();
  describe->add_option("--concurrency", eval_concurrency)->capture_default_str()->check(CLI::PositiveNumber);

  std::string first_file, first_model, second_file, second_model, pairs_out;
  auto* pairs = eval->add_subcommand("pairs", "Pair two models' descriptions for blind rating");
  pairs->add_option("--first", first_file, "Descriptions JSONL of the first model")->required()
      ->check(CLI::ExistingFile);
  pairs->add_option("--first-model", first_model)->required();
  pairs->add_option("--second", second_file, "Descriptions JSONL of the second model")->required()
      ->check(CLI::ExistingFile);
  pairs->add_option("--second-model", second_model)->required();
  pairs->add_option("--seed", eval_seed)->default_val(0);
  pairs->add_option("--out", pairs_out, "Pairs JSONL (server-side, holds attribution)")->required();

  std::string serve_pairs, serve_store, serve_host = "127.0.0.1", serve_static, serve_images;
  int serve_port = 8080;
  auto* serve = eval->add_subcommand("serve", "Serve the rating API");
  serve->add_option("--pairs", serve_pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  serve->add_option("--store", serve_store, "Vote log (JSONL, created if missing)")->required();
  serve->add_option("--port", serve_port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--static-dir", serve_static, "Rating UI files")->check(CLI::ExistingDirectory);
  serve->add_option("--image-root", serve_images, "Base for relative image paths (default: the pairs file's directory)");

  std::string tally_pairs, tally_store, tally_out;
  auto* tally = eval->add_subcommand("tally", "Report preferences from a vote log");
  tally->add_option("--pairs", tally_pairs)->required()->check(CLI::ExistingFile);
  tally->add_option("--store", tally_store)->required()->check(CLI::ExistingFile);
  tally->add_option("--out", tally_out, "Report JSON");

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (gen->parsed()) {
      g.corpus_dir = corpus_dir;
      g.out_dir = out_dir;
      g.prompt_dir = prompt_dir;
      g.mix = MixPlan::parse(mix);
      if (!detector.empty()) g.detector = DetectionSource::parse(detector);
      g.waived = parse_kind_list(waive);
      if (!holdout.empty()) g.holdout = read_id_list(holdout);
      g.retry.max_attempts = max_attempts;
      g.retry.max_in_flight = max_in_flight;
      g.retry.max_requests_per_minute = rpm;
      g.preprocess.target_side = target_side;
      if (!filter.empty()) {
        const auto f = parse_resize_filter(filter);
        if (!f) throw std::invalid_argument("unknown resize filter '" + filter + "'");
        g.preprocess.resize_filter = *f;
      }
      if (!audit_log.empty()) g.audit_log = audit_log;
      const auto stats = run_generate(g, make_backend(backend_spec));
      std::cout << render_stats_table(stats);
      return 0;
    }

    if (build_existence->parsed()) {
      auto rng = Rng::derive(eval_seed, "existence");
      ExistenceBenchmarkOptions options;
      options.per_screen = per_screen;
      const auto items = build_existence_benchmark(existence_src.load(eval_concurrency), rng, options);
      write_jsonl(existence_out, items);
      std::cout << items.size() << " existence items written to " << existence_out << "\n";
      return 0;
    }

    if (build_type->parsed()) {
      auto rng = Rng::derive(eval_seed, "type");
      const auto items = build_type_benchmark(type_src.load(eval_concurrency), rng, per_screen);
      write_jsonl(type_out, items);
      std::cout << items.size() << " type items written to " << type_out << "\n";
      return 0;
    }

    if (run->parsed()) {
      auto client = make_vision_client(run_model);
      BenchmarkRunOptions options;
      options.concurrency = eval_concurrency;
      options.question_template = run_template;
      if (!run_results.empty()) options.results_path = run_results;
      MetricsReport report;
      if (run_kind == "existence") {
        report = run_existence_benchmark(read_jsonl<ExistenceItem>(run_items, existence_item_from_json), *client,
                                         options);
      } else {
        report = run_type_benchmark(read_jsonl<TypeItem>(run_items, type_item_from_json), *client, options);
      }
      auto j = to_json(report);
      j["model"] = client->id();
      j["benchmark"] = run_kind;
      if (!run_report.empty()) write_json(run_report, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (describe->parsed()) {
      auto client = make_vision_client(describe_model);
      const auto screens = describe_src.load(eval_concurrency);
      std::ofstream out(describe_out, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + describe_out);
      for (const auto& s : screens) {
        const auto reply = client->ask({s.image_ref(), describe_question, "describe/" + s.screen_id()});
        out << ojson{{"screen_id", s.screen_id()}, {"image", s.image_ref()}, {"description", text::trim(reply)}}.dump()
            << '\n';
      }
      std::cout << screens.size() << " descriptions written to " << describe_out << "\n";
      return 0;
    }

    if (pairs->parsed()) {
      auto load = [](const std::string& path) {
        return read_jsonl<ModelDescription>(path, [](const nlohmann::json& j) {
          return ModelDescription{j.at("screen_id").get<std::string>(), j.value("image", ""),
                                  j.at("description").get<std::string>()};
        });
      };
      auto rng = Rng::derive(eval_seed, "rating-pairs");
      const auto built = build_rating_pairs(load(first_file), first_model, load(second_file), second_model, rng);
      save_pairs(pairs_out, built);
      std::cout << built.size() << " pairs written to " << pairs_out << "\n";
      return 0;
    }

    if (serve->parsed()) {
      RatingStore store(serve_store);
      const std::filesystem::path image_root =
          serve_images.empty() ? std::filesystem::absolute(serve_pairs).parent_path()
                               : std::filesystem::path(serve_images);
      std::optional<std::filesystem::path> static_dir;
      if (!serve_static.empty()) static_dir = serve_static;
      RatingService service(load_pairs(serve_pairs), store, image_root, static_dir);
      const int port = service.bind(serve_host, serve_port);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      spdlog::info("rating API listening on http://{}:{}", serve_host, port);
      service.listen();
      g_service = nullptr;
      return 0;
    }

    if (tally->parsed()) {
      RatingStore store(tally_store);
      const auto report = tally_ratings(load_pairs(tally_pairs), store.votes());
      const auto j = to_json(report);
      if (!tally_out.empty()) write_json(tally_out, j);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const InsufficientSamples& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const EndpointUnavailable& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
