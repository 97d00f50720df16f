// Copyright 2026 The uiinstruct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "test_support.hpp"
#include "uiinstruct/detector.hpp"
#include "uiinstruct/errors.hpp"
#include "uiinstruct/image.hpp"

namespace uiinstruct {
namespace {

constexpr const char* kTwoRecords =
    R"({"label": "button", "box": [10, 20, 110, 60], "text": "Play", "confidence": 0.9})"
    "\n\n"
    R"({"label": "icon", "box": [0.4, 0.6, 30.5, 30], "iconType": "back"})"
    "\n";

TEST(ParseDetections, ReadsRecordsAndSkipsBlankLines) {
  const auto records = parse_detections(kTwoRecords);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].label, "button");
  EXPECT_EQ(records[0].text, "Play");
  EXPECT_DOUBLE_EQ(*records[0].confidence, 0.9);
  EXPECT_EQ(records[1].icon_subtype, "back");
  EXPECT_FALSE(records[1].confidence.has_value());
}

TEST(ParseDetections, RejectsSchemaViolations) {
  const char* bad[] = {
      "not json",
      "[1, 2]",
      R"({"box": [0, 0, 1, 1]})",
      R"({"label": "", "box": [0, 0, 1, 1]})",
      R"({"label": "button", "box": [0, 0, 1]})",
      R"({"label": "button", "box": [0, 0, "1", 1]})",
      R"({"label": "button", "box": [5, 0, 1, 1]})",
      R"({"label": "button", "box": [0, 0, 1, 1], "confidence": 1.5})",
      R"({"label": "button", "box": [0, 0, 1, 1], "confidence": "high"})",
      R"({"label": "button", "box": [0, 0, 1, 1], "text": 5})",
  };
  for (const char* line : bad) EXPECT_THROW(parse_detections(line), MalformedDetection) << line;
}

TEST(ParseDetections, SerializeRoundTrips) {
  const auto records = parse_detections(kTwoRecords);
  const auto again = parse_detections(serialize_detections(records));
  ASSERT_EQ(again.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(again[i].label, records[i].label);
    EXPECT_EQ(again[i].box, records[i].box);
    EXPECT_EQ(again[i].text, records[i].text);
    EXPECT_EQ(again[i].icon_subtype, records[i].icon_subtype);
    EXPECT_EQ(again[i].confidence, records[i].confidence);
  }
}

TEST(DetectionSource, ParsesSpecs) {
  EXPECT_EQ(DetectionSource::parse("annotation:/x").kind, DetectionSourceKind::kAnnotationFile);
  EXPECT_EQ(DetectionSource::parse("command:det {image}").locator, "det {image}");
  EXPECT_EQ(DetectionSource::parse("http:http://h/d").kind, DetectionSourceKind::kHttpEndpoint);
  EXPECT_EQ(DetectionSource::parse("https://h/d").kind, DetectionSourceKind::kHttpEndpoint);
  EXPECT_EQ(DetectionSource::parse("/some/dir").kind, DetectionSourceKind::kAnnotationFile);
  EXPECT_THROW(DetectionSource::parse("annotation:"), std::invalid_argument);
  DetectionSource zero{DetectionSourceKind::kAnnotationFile, "/x", std::chrono::milliseconds(0)};
  EXPECT_THROW(zero.validate(), std::invalid_argument);
}

TEST(DetectionLoader, ToScreenMapsLabelsAndRounds) {
  const DetectionLoader loader({DetectionSourceKind::kAnnotationFile, "/unused"});
  auto records = parse_detections(kTwoRecords);
  records.push_back({"banana", std::nullopt, {0, 0, 1, 1}, std::nullopt, std::nullopt});
  records.push_back({"text", std::nullopt, {0, 0, 5, 5}, "two\nlines", std::nullopt});
  records.push_back({"button", std::nullopt, {0, 0, 5, 5}, std::nullopt, "stray"});
  const auto screen = loader.to_screen(records, "x.png", "x", 200, 200);
  ASSERT_EQ(screen.elements().size(), 4u);
  EXPECT_EQ(loader.dropped_labels(), 1u);
  EXPECT_EQ(screen.elements()[1].box, BoundingBox(0, 1, 31, 30));
  EXPECT_EQ(screen.elements()[2].text, "two lines");
  EXPECT_FALSE(screen.elements()[3].icon_subtype.has_value());
  for (int i = 0; i < 4; ++i) EXPECT_EQ(screen.elements()[i].ordinal, i);
}

TEST(DetectionLoader, AnnotationDirectoryReadsPngSize) {
  testing::TempDir dir;
  write_png(dir / "a.png", Image(120, 240));
  testing::write_text(dir / "a.detections", kTwoRecords);
  const DetectionLoader loader({DetectionSourceKind::kAnnotationFile, dir.path().string()});
  const auto screen = loader.load_screen(dir / "a.png", "a");
  EXPECT_EQ(screen.width(), 120);
  EXPECT_EQ(screen.height(), 240);
  EXPECT_EQ(screen.elements().size(), 2u);

  EXPECT_THROW(loader.load_screen(dir / "missing.png", "missing"), SourceUnavailable);
  write_png(dir / "b.png", Image(10, 10));
  EXPECT_THROW(loader.load_screen(dir / "b.png", "b"), SourceUnavailable);
  testing::write_text(dir / "b.detections", "{broken");
  EXPECT_THROW(loader.load_screen(dir / "b.png", "b"), MalformedDetection);
}

TEST(DetectionLoader, ExternalCommandReadsStdout) {
  testing::TempDir dir;
  write_png(dir / "it's.png", Image(50, 50));
  testing::write_text(dir / "out.jsonl", R"({"label": "text", "box": [1, 1, 9, 9], "text": "hi"})");
  const DetectionLoader loader(
      {DetectionSourceKind::kExternalCommand, "test -f {image} && cat '" + (dir / "out.jsonl").string() + "'"});
  const auto screen = loader.load_screen(dir / "it's.png", "q");
  ASSERT_EQ(screen.elements().size(), 1u);
  EXPECT_EQ(screen.elements()[0].text, "hi");
}

TEST(DetectionLoader, ExternalCommandFailureAndTimeout) {
  testing::TempDir dir;
  write_png(dir / "a.png", Image(5, 5));
  const DetectionLoader failing({DetectionSourceKind::kExternalCommand, "exit 3"});
  EXPECT_THROW(failing.load_screen(dir / "a.png", "a"), SourceUnavailable);
  const DetectionLoader slow({DetectionSourceKind::kExternalCommand, "sleep 5", std::chrono::milliseconds(200)});
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(slow.load_screen(dir / "a.png", "a"), SourceUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
}

TEST(DetectionLoader, HttpEndpoint) {
  testing::TempDir dir;
  write_png(dir / "a.png", Image(64, 32));
  httplib::Server server;
  std::size_t received = 0;
  server.Post("/detect", [&](const httplib::Request& req, httplib::Response& res) {
    received = req.body.size();
    res.set_content(R"({"label": "picture", "box": [0, 0, 64, 32]})", "application/x-ndjson");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto base = "http://127.0.0.1:" + std::to_string(port);
  const DetectionLoader loader({DetectionSourceKind::kHttpEndpoint, base + "/detect"});
  const auto screen = loader.load_screen(dir / "a.png", "a");
  EXPECT_EQ(screen.elements().size(), 1u);
  EXPECT_EQ(received, read_file_bytes(dir / "a.png").size());

  const DetectionLoader broken({DetectionSourceKind::kHttpEndpoint, base + "/broken"});
  EXPECT_THROW(broken.load_screen(dir / "a.png", "a"), SourceUnavailable);
  server.stop();
  t.join();
}

TEST(FilterByConfidence, KeepsUnscoredAndRedensifies) {
  const DetectionLoader loader({DetectionSourceKind::kAnnotationFile, "/unused"});
  const auto screen = loader.to_screen(parse_detections(testing::read_text(testing::fixture("corpus50/s000.detections"))),
                                       "s000.png", "s000", 375, 812);
  const auto filtered = filter_by_confidence(screen, kDefaultConfidenceThreshold);
  EXPECT_EQ(filtered.elements().size(), screen.elements().size() - 1);
  for (std::size_t i = 0; i < filtered.elements().size(); ++i) {
    EXPECT_EQ(filtered.elements()[i].ordinal, static_cast<int>(i));
  }
  EXPECT_THROW(filter_by_confidence(screen, 1.1), std::invalid_argument);
  EXPECT_THROW(filter_by_confidence(screen, -0.1), std::invalid_argument);
}

TEST(FilterByConfidence, MonotoneAndIdempotent) {
  Rng rng(3);
  for (int s = 0; s < 200; ++s) {
    auto base = testing::random_screen(rng, "r");
    std::vector<UIElement> els = base.elements();
    for (auto& e : els) {
      if (rng.uniform(4) != 0) e.confidence = rng.unit();
    }
    const Screen screen("r", "r.png", 400, 800, els);
    std::size_t previous = screen.elements().size() + 1;
    for (double t = 0.0; t <= 1.0; t += 0.125) {
      const auto once = filter_by_confidence(screen, t);
      EXPECT_LE(once.elements().size(), previous);
      previous = once.elements().size();
      EXPECT_EQ(filter_by_confidence(once, t), once);
      for (const auto& e : once.elements()) EXPECT_TRUE(!e.confidence || *e.confidence >= t);
    }
  }
}

}  // namespace
}  // namespace uiinstruct
