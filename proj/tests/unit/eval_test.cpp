// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "test_support.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/eval.hpp"
#include "uiinstruct/format.hpp"
#include "uiinstruct/image.hpp"

namespace uiinstruct {
namespace {

using testing::element;

// Screen whose elements all carry texts from `vocab`, so two screens built
// from disjoint vocabularies never match each other.
Screen vocab_screen(const std::string& id, const std::vector<std::string>& vocab) {
  std::vector<UIElement> els;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    els.push_back(element(ElementType::kButton, vocab[i], {}, {0, static_cast<int>(i) * 10, 100, static_cast<int>(i) * 10 + 9},
                          static_cast<int>(i)));
  }
  return Screen(id, id + ".png", 100, 200, els);
}

std::vector<ExistenceItem> balanced_items(int n) {
  std::vector<ExistenceItem> items;
  for (int i = 0; i < n; ++i) {
    ExistenceItem item;
    item.item_id = "i" + std::to_string(100000 + i);
    item.screen_id = "s";
    item.image_ref = "s.png";
    item.probe = "Button with text \"x\"";
    item.probe_element = element(ElementType::kButton, "x", {}, {0, 0, 1, 1});
    item.label = i % 2 == 0 ? ExistenceLabel::kPositive : ExistenceLabel::kNegative;
    item.source_screen_id = "s";
    items.push_back(item);
  }
  return items;
}

TEST(Matching, Predicate) {
  const auto back = element(ElementType::kIcon, {}, "back", {0, 0, 1, 1});
  EXPECT_TRUE(elements_match(back, element(ElementType::kIcon, {}, "Back ", {5, 5, 9, 9})));
  EXPECT_FALSE(elements_match(back, element(ElementType::kIcon, {}, "more", {0, 0, 1, 1})));
  EXPECT_FALSE(elements_match(back, element(ElementType::kButton, "back", {}, {0, 0, 1, 1})));
  const auto play = element(ElementType::kButton, " PLAY", {}, {0, 0, 1, 1});
  EXPECT_TRUE(elements_match(play, element(ElementType::kButton, "play ", {}, {3, 3, 4, 4})));
  EXPECT_FALSE(elements_match(play, element(ElementType::kButton, "Pause", {}, {0, 0, 1, 1})));
  EXPECT_FALSE(elements_match(play, element(ElementType::kButton, {}, {}, {0, 0, 1, 1})));
  const auto bare_picture = element(ElementType::kPicture, {}, {}, {0, 0, 1, 1});
  EXPECT_TRUE(elements_match(bare_picture, element(ElementType::kPicture, "caption", {}, {0, 0, 1, 1})));
}

TEST(ExistenceBenchmark, RejectsNegativeThatExistsOnProbedScreen) {
  // The only candidates from the other screen are icon(back), which also
  // sits on the probed screen, so no negative may be emitted for it.
  std::vector<UIElement> a_els, b_els;
  for (int i = 0; i < 5; ++i) {
    a_els.push_back(element(ElementType::kIcon, {}, "back", {0, i * 10, 9, i * 10 + 9}, i));
    b_els.push_back(element(ElementType::kIcon, {}, "back", {0, i * 10, 9, i * 10 + 9}, i));
  }
  const std::vector<Screen> screens = {Screen("a", "a.png", 100, 100, a_els), Screen("b", "b.png", 100, 100, b_els)};
  Rng rng(1);
  const auto items = build_existence_benchmark(screens, rng, {5, 20});
  for (const auto& item : items) EXPECT_EQ(item.label, ExistenceLabel::kPositive);
  EXPECT_EQ(items.size(), 10u);
}

TEST(ExistenceBenchmark, DisjointVocabulariesGiveFivePlusFive) {
  const std::vector<Screen> screens = {vocab_screen("a", {"a1", "a2", "a3", "a4", "a5", "a6"}),
                                       vocab_screen("b", {"b1", "b2", "b3", "b4", "b5", "b6", "b7"})};
  Rng rng(2);
  const auto items = build_existence_benchmark(screens, rng);
  ASSERT_EQ(items.size(), 20u);
  std::map<std::string, std::pair<int, int>> per_screen;
  for (const auto& item : items) {
    auto& [pos, neg] = per_screen[item.screen_id];
    if (item.label == ExistenceLabel::kPositive) {
      ++pos;
      EXPECT_EQ(item.source_screen_id, item.screen_id);
    } else {
      ++neg;
      EXPECT_NE(item.source_screen_id, item.screen_id);
    }
  }
  EXPECT_EQ(per_screen["a"], std::make_pair(5, 5));
  EXPECT_EQ(per_screen["b"], std::make_pair(5, 5));
}

TEST(ExistenceBenchmark, NoNegativeEverMatchesProperty) {
  Rng rng(5);
  std::vector<Screen> screens;
  for (int i = 0; i < 60; ++i) screens.push_back(testing::random_screen(rng, "r" + std::to_string(i), 400, 800, 30));
  const auto items = build_existence_benchmark(screens, rng);
  std::map<std::string, const Screen*> by_id;
  for (const auto& s : screens) by_id[s.screen_id()] = &s;
  std::set<std::string> ids;
  int negatives = 0;
  for (const auto& item : items) {
    EXPECT_TRUE(ids.insert(item.item_id).second);
    const bool present = screen_has_match(*by_id.at(item.screen_id), item.probe_element);
    if (item.label == ExistenceLabel::kNegative) {
      ++negatives;
      EXPECT_FALSE(present) << item.item_id;
    } else {
      EXPECT_TRUE(present);
    }
  }
  EXPECT_GT(negatives, 0);
}

TEST(ExistenceBenchmark, TooSmallCorpus) {
  Rng rng(1);
  EXPECT_THROW(build_existence_benchmark({testing::podcast_screen()}, rng), CorpusTooSmall);
  const std::vector<Screen> tiny = {vocab_screen("a", {"x"}), vocab_screen("b", {"y"})};
  EXPECT_THROW(build_existence_benchmark(tiny, rng), CorpusTooSmall);
}

TEST(ExistenceBenchmark, DeterministicPerSeed) {
  const std::vector<Screen> screens = {testing::podcast_screen(), testing::settings_screen()};
  Rng a(9), b(9);
  EXPECT_EQ(build_existence_benchmark(screens, a), build_existence_benchmark(screens, b));
}

TEST(TypeBenchmark, OptionsArePermutationsAndAnswerIsTrueType) {
  Rng rng(4);
  const std::vector<Screen> screens = {testing::podcast_screen(), testing::settings_screen()};
  const auto items = build_type_benchmark(screens, rng, 5);
  ASSERT_EQ(items.size(), 10u);
  std::set<std::vector<ElementType>> orders;
  for (const auto& item : items) {
    EXPECT_EQ(item.answer, item.probe_element.type);
    EXPECT_TRUE(is_benchmark_type(item.answer));
    auto sorted = item.options;
    std::sort(sorted.begin(), sorted.end());
    std::vector<ElementType> expected(kBenchmarkTypes.begin(), kBenchmarkTypes.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(sorted, expected);
    orders.insert(item.options);
    EXPECT_EQ(item.probe.find(display_name(item.answer)), std::string::npos) << item.probe;
  }
  EXPECT_GT(orders.size(), 1u);
  EXPECT_THROW(build_type_benchmark({Screen("e", "e.png", 5, 5, {})}, rng), CorpusTooSmall);
}

TEST(TypeBenchmark, TabsAreNotAsked) {
  Rng rng(4);
  const Screen tabs("t", "t.png", 100, 100,
                    {element(ElementType::kTab, "Home", {}, {0, 0, 10, 10}, 0),
                     element(ElementType::kTab, "More", {}, {10, 0, 20, 10}, 1)});
  EXPECT_THROW(build_type_benchmark({tabs}, rng), CorpusTooSmall);
}

TEST(Questions, TemplatesAndJson) {
  Rng rng(3);
  const auto ex = build_existence_benchmark({testing::podcast_screen(), testing::settings_screen()}, rng).front();
  EXPECT_EQ(existence_question(ex), "Is there a " + ex.probe + " in this UI screen? Answer yes or no.");
  EXPECT_EQ(existence_question(ex, "{element}?"), ex.probe + "?");
  EXPECT_EQ(existence_item_from_json(nlohmann::json::parse(to_json(ex).dump())), ex);

  const auto ty = build_type_benchmark({testing::settings_screen()}, rng, 1).front();
  const auto q = type_question(ty);
  EXPECT_TRUE(q.starts_with("What type of UI element is " + ty.probe + "? Choose exactly one of: "));
  EXPECT_NE(q.find("Segmented Control"), std::string::npos);
  EXPECT_EQ(type_item_from_json(nlohmann::json::parse(to_json(ty).dump())), ty);
  EXPECT_THROW(type_item_from_json(nlohmann::json::parse(R"({"item_id": 1})")), ValidationError);
}

TEST(Judges, YesNo) {
  EXPECT_EQ(judge_yes_no("Yes."), true);
  EXPECT_EQ(judge_yes_no("no, there isn't"), false);
  EXPECT_EQ(judge_yes_no("**YES**"), true);
  EXPECT_EQ(judge_yes_no("Yesterday I saw nothing"), std::nullopt);
  EXPECT_EQ(judge_yes_no("yes and no"), std::nullopt);
  EXPECT_EQ(judge_yes_no("I am not sure"), std::nullopt);
  EXPECT_EQ(judge_yes_no("Nope"), std::nullopt);
}

TEST(Judges, Type) {
  EXPECT_EQ(judge_type("Text Field"), ElementType::kTextField);
  EXPECT_EQ(judge_type("It is a text field."), ElementType::kTextField);
  EXPECT_EQ(judge_type("text"), ElementType::kText);
  EXPECT_EQ(judge_type("This looks like a switch"), ElementType::kToggle);
  EXPECT_EQ(judge_type("page control"), ElementType::kPageControl);
  EXPECT_EQ(judge_type("Button. Definitely a button."), ElementType::kButton);
  EXPECT_EQ(judge_type("button or icon"), std::nullopt);
  EXPECT_EQ(judge_type("no idea"), std::nullopt);
  EXPECT_EQ(judge_type("Tab"), std::nullopt);
  for (auto t : kBenchmarkTypes) {
    EXPECT_EQ(judge_type(display_name(t)), t);
    EXPECT_EQ(judge_type(canonical_name(t)), t);
  }
}

TEST(Metrics, MatchesNaiveOracleOnRandomConfusions) {
  Rng rng(77);
  for (int trial = 0; trial < 10000; ++trial) {
    Confusion c{static_cast<std::int64_t>(rng.uniform(50)), static_cast<std::int64_t>(rng.uniform(50)),
                static_cast<std::int64_t>(rng.uniform(50)), static_cast<std::int64_t>(rng.uniform(50))};
    // Expand into labelled outcomes and count naively.
    std::vector<std::pair<bool, bool>> outcomes;  // (truth, predicted)
    for (int i = 0; i < c.tp; ++i) outcomes.emplace_back(true, true);
    for (int i = 0; i < c.fp; ++i) outcomes.emplace_back(false, true);
    for (int i = 0; i < c.tn; ++i) outcomes.emplace_back(false, false);
    for (int i = 0; i < c.fn; ++i) outcomes.emplace_back(true, false);
    double right = 0, pred_pos = 0, true_pos = 0, hits = 0;
    for (auto [truth, pred] : outcomes) {
      right += truth == pred;
      pred_pos += pred;
      true_pos += truth;
      hits += truth && pred;
    }
    const double acc = outcomes.empty() ? 0 : right / outcomes.size();
    const double p = pred_pos == 0 ? 0 : hits / pred_pos;
    const double r = true_pos == 0 ? 0 : hits / true_pos;
    const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
    const auto m = metrics_from_confusion(c);
    ASSERT_NEAR(m.accuracy, acc, 1e-12);
    ASSERT_NEAR(m.precision, p, 1e-12);
    ASSERT_NEAR(m.recall, r, 1e-12);
    ASSERT_NEAR(m.f1, f, 1e-12);
    ASSERT_EQ(m.items, static_cast<int>(outcomes.size()));
  }
}

TEST(Metrics, ZeroDenominatorsAreZero) {
  const auto m = metrics_from_confusion({});
  EXPECT_EQ(m.accuracy, 0);
  EXPECT_EQ(m.precision, 0);
  EXPECT_EQ(m.recall, 0);
  EXPECT_EQ(m.f1, 0);
}

TEST(RunExistence, AlwaysYesStub) {
  const auto items = balanced_items(1000);
  FunctionVisionClient yes("always-yes", [](const VisionQuery&) { return "Yes."; });
  const auto m = run_existence_benchmark(items, yes);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_EQ(m.confusion, (Confusion{500, 500, 0, 0}));
}

TEST(RunExistence, OracleStubIsPerfect) {
  const auto items = balanced_items(200);
  std::map<std::string, bool> truth;
  for (const auto& i : items) truth["existence/" + i.item_id] = i.label == ExistenceLabel::kPositive;
  FunctionVisionClient oracle("oracle", [&](const VisionQuery& q) { return truth.at(q.tag) ? "yes" : "no"; });
  const auto m = run_existence_benchmark(items, oracle);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(RunExistence, UnparseableRepliesCountAgainstTheModel) {
  const auto items = balanced_items(10);
  FunctionVisionClient vague("vague", [](const VisionQuery&) { return "Hard to say."; });
  std::vector<ItemOutcome> outcomes;
  const auto m = run_existence_benchmark(items, vague, {}, &outcomes);
  EXPECT_EQ(m.confusion, (Confusion{0, 5, 0, 5}));
  EXPECT_EQ(m.unparseable, 10);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.0);
  ASSERT_EQ(outcomes.size(), 10u);
  EXPECT_TRUE(outcomes[0].judged.empty());
}

TEST(RunExistence, UsesTemplateAndTag) {
  const auto items = balanced_items(2);
  std::vector<std::string> seen;
  std::mutex m;
  FunctionVisionClient rec("rec", [&](const VisionQuery& q) {
    std::lock_guard lock(m);
    seen.push_back(q.tag + "|" + q.question);
    return "yes";
  });
  BenchmarkRunOptions options;
  options.question_template = "Q {element}";
  run_existence_benchmark(items, rec, options);
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen[0], "existence/i100000|Q Button with text \"x\"");
}

TEST(RunType, UniformRandomStubScoresOneInTwelve) {
  std::vector<TypeItem> items;
  Rng build(21);
  for (int i = 0; i < 10000; ++i) {
    TypeItem item;
    item.item_id = "t" + std::to_string(100000 + i);
    item.answer = kBenchmarkTypes[build.uniform(kBenchmarkTypes.size())];
    item.probe_element = element(item.answer, {}, {}, {0, 0, 1, 1});
    item.options.assign(kBenchmarkTypes.begin(), kBenchmarkTypes.end());
    item.probe = "the UI element";
    items.push_back(item);
  }
  FunctionVisionClient guesser("uniform", [](const VisionQuery& q) {
    auto rng = Rng::derive(99, q.tag);
    return std::string(display_name(kBenchmarkTypes[rng.uniform(kBenchmarkTypes.size())]));
  });
  const auto m = run_type_benchmark(items, guesser);
  EXPECT_NEAR(m.accuracy, 1.0 / 12, 0.01);
  EXPECT_EQ(m.unparseable, 0);
  int total = 0;
  for (const auto& [type, tally] : m.per_type) total += tally.total;
  EXPECT_EQ(total, 10000);
}

TEST(Run, EndpointUnavailableSavesPartialResults) {
  testing::TempDir dir;
  const auto items = balanced_items(20);
  std::atomic<int> calls{0};
  FunctionVisionClient flaky("flaky", [&](const VisionQuery& q) -> std::string {
    ++calls;
    if (q.tag == "existence/i100013") throw EndpointUnavailable("down");
    return "yes";
  });
  BenchmarkRunOptions options;
  options.concurrency = 1;
  options.results_path = dir / "results.jsonl";
  try {
    run_existence_benchmark(items, flaky, options);
    FAIL() << "expected EndpointUnavailable";
  } catch (const EndpointUnavailable& e) {
    EXPECT_NE(std::string(e.what()).find("13 of 20"), std::string::npos) << e.what();
  }
  std::ifstream in(dir / "results.jsonl");
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    EXPECT_EQ(nlohmann::json::parse(line)["judged"], "yes");
    ++lines;
  }
  EXPECT_EQ(lines, 13);
}

TEST(ScriptedVision, MapsBackendErrors) {
  auto backend = std::make_shared<ScriptedBackend>("vision-mock");
  backend->script_prefix("existence/", {"yes"});
  ScriptedVisionClient client(backend);
  EXPECT_EQ(client.ask({"x.png", "q", "existence/1"}), "yes");
  EXPECT_THROW(client.ask({"x.png", "q", "type/1"}), EndpointUnavailable);
  EXPECT_EQ(client.id(), "vision-mock");
  EXPECT_THROW(make_vision_client("openai:http://x/v1"), std::invalid_argument);
  EXPECT_THROW(make_vision_client("bogus"), std::invalid_argument);
}

TEST(Base64, KnownVectors) {
  auto enc = [](std::string s) {
    return base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(RemoteVision, SendsImageDataUrlAndRetries) {
  testing::TempDir dir;
  write_png(dir / "s.png", Image(4, 4));
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++calls == 1) {
      res.status = 429;
      return;
    }
    body = req.body;
    res.set_content(R"({"choices": [{"message": {"content": "No."}}]})", "application/json");
  });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteVisionClient::Config config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.model = "vlm";
  RemoteVisionClient client(config);
  client.set_sleeper([](auto) {});
  EXPECT_EQ(client.ask({(dir / "s.png").string(), "Is there a thing?", "existence/x"}), "No.");
  EXPECT_EQ(calls.load(), 2);
  const auto j = nlohmann::json::parse(body);
  EXPECT_EQ(j["model"], "vlm");
  const auto& content = j["messages"][0]["content"];
  EXPECT_EQ(content[0]["text"], "Is there a thing?");
  const auto png = read_file_bytes(dir / "s.png");
  EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64," + base64_encode(png));

  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/bad";
  RemoteVisionClient bad(config);
  EXPECT_THROW(bad.ask({(dir / "s.png").string(), "q", "existence/y"}), EndpointUnavailable);
  server.stop();
  t.join();
}

}  // namespace
}  // namespace uiinstruct
