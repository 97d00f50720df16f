// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "test_support.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"
#include "uiinstruct/rating.hpp"

namespace uiinstruct {
namespace {

std::vector<ModelDescription> descriptions(int n, const std::string& prefix) {
  std::vector<ModelDescription> out;
  for (int i = 0; i < n; ++i) {
    const auto id = "s" + std::to_string(1000 + i);
    out.push_back({id, id + ".png", prefix + " description of " + id});
  }
  return out;
}

std::vector<RatingPair> hundred_pairs(std::uint64_t seed = 7) {
  Rng rng(seed);
  return build_rating_pairs(descriptions(100, "ours"), "ours", descriptions(100, "base"), "base", rng);
}

// Choice that credits `model` on this pair, whatever side it landed on.
Choice side_of(const RatingPair& p, const std::string& model) {
  return p.model_of_a() == model ? Choice::kA : Choice::kB;
}

TEST(RatingPairs, OnePerScreenWithBalancedSides) {
  const auto pairs = hundred_pairs();
  ASSERT_EQ(pairs.size(), 100u);
  int a_first = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    EXPECT_EQ(p.pair_id, static_cast<int>(i) + 1);
    a_first += p.a_is_first;
    const auto& a_model = p.model_of_a();
    EXPECT_TRUE(p.description_a.starts_with(a_model)) << p.description_a;
    EXPECT_TRUE(p.description_b.starts_with(p.model_of_b()));
  }
  EXPECT_GT(a_first, 30);
  EXPECT_LT(a_first, 70);
  EXPECT_EQ(hundred_pairs(7), hundred_pairs(7));
  EXPECT_NE(hundred_pairs(7), hundred_pairs(8));
}

TEST(RatingPairs, MissingOrBlankDescriptions) {
  Rng rng(1);
  auto short_list = descriptions(3, "b");
  short_list.pop_back();
  EXPECT_THROW(build_rating_pairs(descriptions(3, "a"), "a", short_list, "b", rng), MissingDescription);
  EXPECT_THROW(build_rating_pairs(short_list, "a", descriptions(3, "b"), "b", rng), MissingDescription);
  auto blank = descriptions(3, "b");
  blank[1].description = "  ";
  EXPECT_THROW(build_rating_pairs(descriptions(3, "a"), "a", blank, "b", rng), MissingDescription);
  EXPECT_THROW(build_rating_pairs(descriptions(3, "a"), "a", descriptions(3, "b"), "a", rng), std::invalid_argument);
}

TEST(RatingPairs, FileRoundTrip) {
  testing::TempDir dir;
  const auto pairs = hundred_pairs();
  save_pairs(dir / "pairs.jsonl", pairs);
  EXPECT_EQ(load_pairs(dir / "pairs.jsonl"), pairs);
  testing::write_text(dir / "bad.jsonl", "{\"pair_id\": 1}\n");
  EXPECT_THROW(load_pairs(dir / "bad.jsonl"), ValidationError);
}

TEST(RatingPairs, ClientPayloadHasNoAttribution) {
  for (const auto& p : hundred_pairs()) {
    const auto payload = client_payload(p).dump();
    EXPECT_EQ(payload.find("ours"), payload.find("ours description"));
    EXPECT_EQ(payload.find("\"base\""), std::string::npos);
    EXPECT_EQ(payload.find("first"), std::string::npos);
    EXPECT_EQ(payload.find("model"), std::string::npos);
  }
}

TEST(Tally, ResolvesThroughHiddenAttribution) {
  const auto pairs = hundred_pairs();
  std::vector<RatingVote> votes;
  for (int i = 0; i < 100; ++i) {
    const auto& p = pairs[i];
    const Choice c = i < 72 ? side_of(p, "ours") : i < 92 ? side_of(p, "base") : Choice::kSame;
    votes.push_back({p.pair_id, "r1", c, ""});
  }
  const auto report = tally_ratings(pairs, votes);
  EXPECT_EQ(report.first_model, "ours");
  EXPECT_EQ(report.overall.first, 72);
  EXPECT_EQ(report.overall.second, 20);
  EXPECT_EQ(report.overall.same, 8);
  EXPECT_DOUBLE_EQ(report.overall.first_pct(), 72.0);
  EXPECT_DOUBLE_EQ(report.overall.second_pct(), 20.0);
  EXPECT_DOUBLE_EQ(report.overall.same_pct(), 8.0);
  EXPECT_EQ(report.per_rater.at("r1").total(), 100);
}

TEST(Tally, EdgeCases) {
  const auto pairs = hundred_pairs();
  const auto empty = tally_ratings(pairs, {});
  EXPECT_EQ(empty.overall.total(), 0);
  EXPECT_EQ(empty.overall.first_pct(), 0.0);
  EXPECT_EQ(empty.overall.same_pct(), 0.0);

  std::vector<RatingVote> same;
  for (const auto& p : pairs) same.push_back({p.pair_id, "r", Choice::kSame, ""});
  EXPECT_DOUBLE_EQ(tally_ratings(pairs, same).overall.same_pct(), 100.0);

  // Later vote from the same rater wins; unknown pairs are counted apart.
  const std::vector<RatingVote> revised = {{1, "r", side_of(pairs[0], "base"), ""},
                                           {1, "r", side_of(pairs[0], "ours"), ""},
                                           {1, "q", Choice::kSame, ""},
                                           {999, "r", Choice::kA, ""}};
  const auto report = tally_ratings(pairs, revised);
  EXPECT_EQ(report.overall.first, 1);
  EXPECT_EQ(report.overall.second, 0);
  EXPECT_EQ(report.overall.same, 1);
  EXPECT_EQ(report.unresolved, 1);
  EXPECT_EQ(report.per_rater.size(), 2u);
}

TEST(Choice, Parse) {
  EXPECT_EQ(parse_choice("a"), Choice::kA);
  EXPECT_EQ(parse_choice("B"), Choice::kB);
  EXPECT_EQ(parse_choice("Same"), Choice::kSame);
  EXPECT_EQ(parse_choice("C"), std::nullopt);
  EXPECT_EQ(parse_choice(""), std::nullopt);
}

TEST(RatingStore, PersistsAndKeepsAudit) {
  testing::TempDir dir;
  {
    RatingStore store(dir / "votes.jsonl");
    store.record({1, "r", Choice::kA, "t1"});
    store.record({1, "r", Choice::kB, "t2"});
    store.record({2, "q", Choice::kSame, "t3"});
  }
  testing::write_text(dir / "votes.jsonl", testing::read_text(dir / "votes.jsonl") + "garbage\n");
  RatingStore reopened(dir / "votes.jsonl");
  EXPECT_EQ(reopened.audit().size(), 3u);
  const auto votes = reopened.votes();
  ASSERT_EQ(votes.size(), 2u);
  EXPECT_EQ(votes[0], (RatingVote{1, "r", Choice::kB, "t2"}));
  EXPECT_EQ(reopened.rated_by("r"), std::set<int>{1});
  EXPECT_TRUE(reopened.rated_by("nobody").empty());
}

class RatingServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(3);
    pairs_ = build_rating_pairs(descriptions(3, "ours"), "ours", descriptions(3, "base"), "base", rng);
    for (const auto& p : pairs_) write_png(dir_ / p.image_ref, Image(4, 4, {128, 128, 128}));
    std::filesystem::remove(dir_ / pairs_[2].image_ref);
    store_ = std::make_unique<RatingStore>(dir_ / "votes.jsonl");
    service_ = std::make_unique<RatingService>(pairs_, *store_, dir_.path());
  }

  static nlohmann::json body(const ApiResponse& r) { return nlohmann::json::parse(r.body); }
  std::string vote_body(int id, const std::string& rater, const std::string& choice) const {
    return nlohmann::json{{"pair_id", id}, {"rater_id", rater}, {"choice", choice}}.dump();
  }

  testing::TempDir dir_;
  std::vector<RatingPair> pairs_;
  std::unique_ptr<RatingStore> store_;
  std::unique_ptr<RatingService> service_;
};

TEST_F(RatingServiceTest, WalksRaterThroughPairs) {
  auto r = service_->next("alice");
  ASSERT_EQ(r.status, 200);
  EXPECT_FALSE(body(r)["done"].get<bool>());
  EXPECT_EQ(body(r)["pair"]["pair_id"], 1);
  EXPECT_EQ(r.body.find("a_is_first"), std::string::npos);
  EXPECT_EQ(r.body.find("\"base\""), std::string::npos);

  for (int id = 1; id <= 3; ++id) EXPECT_EQ(service_->vote(vote_body(id, "alice", "A")).status, 200);
  r = service_->next("alice");
  EXPECT_TRUE(body(r)["done"].get<bool>());
  EXPECT_EQ(body(service_->progress("alice"))["completed"], 3);
  EXPECT_EQ(body(service_->progress("bob"))["completed"], 0);
  EXPECT_EQ(body(service_->next("bob"))["pair"]["pair_id"], 1);

  const auto tally = body(service_->tally());
  EXPECT_EQ(tally["overall"]["total"], 3);
  EXPECT_EQ(tally["first_model"], "ours");
}

TEST_F(RatingServiceTest, RejectsBadRequests) {
  EXPECT_EQ(service_->next("").status, 400);
  EXPECT_EQ(service_->next(std::string(129, 'x')).status, 400);
  EXPECT_EQ(service_->progress(" ").status, 400);
  EXPECT_EQ(service_->vote("not json").status, 400);
  EXPECT_EQ(service_->vote("[1]").status, 400);
  EXPECT_EQ(service_->vote(R"({"pair_id": "1", "rater_id": "r", "choice": "A"})").status, 400);
  EXPECT_EQ(service_->vote(vote_body(1, "r", "C")).status, 400);
  EXPECT_EQ(service_->vote(vote_body(1, "", "A")).status, 400);
  EXPECT_EQ(service_->vote(vote_body(42, "r", "A")).status, 404);
  EXPECT_EQ(service_->pair(42).status, 404);
  EXPECT_EQ(service_->image(42).status, 404);
  EXPECT_EQ(service_->image(3).status, 404);
  EXPECT_TRUE(store_->audit().empty());
}

TEST_F(RatingServiceTest, ServesImages) {
  const auto r = service_->image(1);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "image/png");
  const std::vector<std::uint8_t> bytes(r.body.begin(), r.body.end());
  EXPECT_EQ(decode_png(bytes).width(), 4);
}

TEST_F(RatingServiceTest, OverHttp) {
  const int port = service_->bind("127.0.0.1", 0);
  std::thread server([this] { service_->listen(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  httplib::Result res;
  for (int i = 0; i < 50 && !(res = client.Get("/api/next?rater=carol")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(nlohmann::json::parse(res->body)["pair"]["pair_id"], 1);

  auto posted = client.Post("/api/votes", vote_body(1, "carol", "same"), "application/json");
  ASSERT_TRUE(posted);
  EXPECT_EQ(posted->status, 200);
  EXPECT_EQ(client.Get("/api/pairs/2")->status, 200);
  EXPECT_EQ(client.Get("/api/pairs/99")->status, 404);
  const auto image = client.Get("/api/pairs/1/image");
  EXPECT_EQ(image->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(nlohmann::json::parse(client.Get("/api/progress?rater=carol")->body)["completed"], 1);
  EXPECT_EQ(nlohmann::json::parse(client.Get("/api/admin/tally")->body)["overall"]["same"], 1);

  service_->stop();
  server.join();
  EXPECT_EQ(store_->votes().size(), 1u);
}

}  // namespace
}  // namespace uiinstruct
