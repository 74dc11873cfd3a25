// Copyright 2026 The ewscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "ew/errors.hpp"
#include "ew/ingest.hpp"
#include "ew/util.hpp"

using namespace ew;
namespace fs = std::filesystem;

TEST_CASE("parse_transcript maps fields directly") {
  auto utts = parse_transcript("[00:00:05] L: Guten Morgen\n");
  REQUIRE(utts.size() == 1);
  CHECK(utts[0].start_time == 5.0);
  CHECK(utts[0].speaker == "L");
  CHECK(utts[0].text == "Guten Morgen");
  CHECK_FALSE(utts[0].nonverbal);
}

TEST_CASE("parse_transcript on empty input") {
  CHECK(parse_transcript("").empty());
  CHECK(parse_transcript("\n\n  \n").empty());
}

TEST_CASE("parse_transcript warns on non-monotonic timestamps") {
  std::vector<std::string> warnings;
  auto utts = parse_transcript("[00:16:00] S01: ja\n[00:15:59] L: gut\n", &warnings);
  CHECK(utts.size() == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("NonMonotonicTime") != std::string::npos);
  CHECK(warnings[0].find("line 2") != std::string::npos);
}

TEST_CASE("parse_transcript rejects malformed lines with line numbers") {
  try {
    parse_transcript("[00:00:01] L: ok\n[00:xx:02] L: bad\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_no == 2);
  }
  try {
    parse_transcript("[00:00:01] L ohne trenner\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_no == 1);
  }
  CHECK_THROWS_AS(parse_transcript("kein zeitstempel\n"), ParseError);
}

TEST_CASE("parse_transcript flags non-verbal annotations") {
  auto utts = parse_transcript("[00:00:05] L: (lacht)\n[00:00:06] S01:\n");
  REQUIRE(utts.size() == 2);
  CHECK(utts[0].nonverbal);
  CHECK(utts[1].nonverbal);
  CHECK(utts[1].text.empty());
}

namespace {
LessonRecord lesson_of(double duration) {
  LessonRecord l;
  l.id = "L001";
  l.duration = duration;
  return l;
}
}  // namespace

TEST_CASE("segment_lesson: 40 min lesson keeps its exact 8-minute tail") {
  auto segs = segment_lesson(lesson_of(2400));
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 960);
  CHECK(segs[1].end == 1920);
  CHECK(segs[2].start == 1920);
  CHECK(segs[2].end == 2400);
  CHECK(segs[2].duration() == 480);  // exactly 8 min: NOT merged
}

TEST_CASE("segment_lesson: 70 min lesson merges its short tail") {
  auto segs = segment_lesson(lesson_of(4200));
  REQUIRE(segs.size() == 4);
  CHECK(segs[3].start == 2880);
  CHECK(segs[3].end == 4200);
  CHECK(segs[3].duration() == 1320);  // 360 s tail absorbed
}

TEST_CASE("segment_lesson: exact single segment") {
  auto segs = segment_lesson(lesson_of(960));
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 960);
}

TEST_CASE("segment_lesson: short lesson is one whole segment") {
  auto segs = segment_lesson(lesson_of(500));
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].duration() == 500);
}

TEST_CASE("segmentation tiling law on random durations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dur(60.0, 5400.0);
  for (int trial = 0; trial < 500; ++trial) {
    double d = dur(rng);
    auto b = segment_boundaries(d);
    REQUIRE(b.size() >= 2);
    CHECK(b.front() == 0.0);
    CHECK(b.back() == d);
    for (std::size_t i = 0; i + 1 < b.size(); ++i) CHECK(b[i] < b[i + 1]);  // no gaps/overlap
    for (std::size_t i = 0; i + 2 < b.size(); ++i) CHECK(b[i + 1] - b[i] == 960.0);
    double last = b.back() - b[b.size() - 2];
    if (d >= 960.0) {
      CHECK(last >= 480.0);
      CHECK(last < 1440.0);
    } else {
      CHECK(last == doctest::Approx(d));
    }
  }
}

TEST_CASE("utterances land in the segment containing their start time") {
  auto lesson = lesson_of(2400);
  lesson.utterances = {{0.0, "L", "start", false},
                       {959.9, "S01", "end of first", false},
                       {960.0, "L", "boundary: belongs to second", false},
                       {2399.0, "L", "last", false},
                       {2500.0, "L", "beyond duration: clamped to final", false}};
  auto segs = segment_lesson(lesson);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].utterances.size() == 2);
  CHECK(segs[1].utterances.size() == 1);
  CHECK(segs[1].utterances[0].start_time == 960.0);
  CHECK(segs[2].utterances.size() == 2);

  std::size_t total = 0;
  for (const auto& s : segs) total += s.utterances.size();
  CHECK(total == lesson.utterances.size());  // each utterance exactly once
}

TEST_CASE("ratings attach by post-merge segment index") {
  auto lesson = lesson_of(2400);
  lesson.ratings_by_segment[0] = {{"R01", 3}, {"R02", 2}};
  lesson.ratings_by_segment[2] = {{"R03", 4}};
  auto segs = segment_lesson(lesson);
  CHECK(segs[0].ratings.size() == 2);
  CHECK(segs[1].ratings.empty());
  CHECK(segs[2].ratings.size() == 1);
}

namespace {

fs::path make_tmp_corpus() {
  fs::path root = fs::temp_directory_path() / ("ew_ingest_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root / "L001");
  write_text_file(root / "manifest.json",
                  R"({"lessons": [{"id": "L001", "duration": 2400.0,
                       "video": "video.mp4", "audio": null}]})");
  write_text_file(root / "L001" / "transcript.txt", "[00:00:05] L: gut gemacht\n");
  write_text_file(root / "L001" / "ratings.csv",
                  "segment_index,rater_id,score\n0,R01,3\n0,R02,2\n1,R01,4\n1,R02,4\n2,R03,1\n2,R04,2\n");
  return root;
}

}  // namespace

TEST_CASE("load_corpus: lesson with 2400 s yields 3 segments") {
  auto root = make_tmp_corpus();
  auto corpus = load_corpus(root);
  CHECK(corpus.load_errors.empty());
  REQUIRE(corpus.lessons.size() == 1);
  const auto& lesson = corpus.lessons[0];
  CHECK(lesson.media_missing);      // video.mp4 listed but absent on disk
  CHECK(lesson.video_ref.empty());  // flagged, not fatal
  auto segs = all_segments(corpus);
  CHECK(segs.size() == 3);
  CHECK(segs[0].ratings.size() == 2);
  fs::remove_all(root);
}

TEST_CASE("load_corpus: empty manifest loads an empty corpus") {
  fs::path root = fs::temp_directory_path() / "ew_ingest_empty";
  fs::remove_all(root);
  fs::create_directories(root);
  write_text_file(root / "manifest.json", R"({"lessons": []})");
  auto corpus = load_corpus(root);
  CHECK(corpus.lessons.empty());
  CHECK(corpus.load_errors.empty());
  fs::remove_all(root);
}

TEST_CASE("load_corpus: missing manifest is a layout error") {
  fs::path root = fs::temp_directory_path() / "ew_ingest_missing";
  fs::remove_all(root);
  fs::create_directories(root);
  CHECK_THROWS_AS(load_corpus(root), CorpusLayoutError);
  fs::remove_all(root);
}

TEST_CASE("load_corpus collects per-lesson errors without failing the run") {
  fs::path root = fs::temp_directory_path() / "ew_ingest_partial";
  fs::remove_all(root);
  fs::create_directories(root / "GOOD");
  write_text_file(root / "manifest.json",
                  R"({"lessons": [{"id": "GOOD", "duration": 960.0},
                                  {"id": "BROKEN", "duration": 960.0}]})");
  write_text_file(root / "GOOD" / "transcript.txt", "[00:00:01] L: hallo\n");
  write_text_file(root / "GOOD" / "ratings.csv", "segment_index,rater_id,score\n0,R01,2\n");
  // BROKEN has no directory at all.
  auto corpus = load_corpus(root);
  CHECK(corpus.lessons.size() == 1);
  REQUIRE(corpus.load_errors.size() == 1);
  CHECK(corpus.load_errors[0].find("BROKEN") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("a lesson without its ratings file is a collected layout error") {
  fs::path root = fs::temp_directory_path() / "ew_ingest_noratings";
  fs::remove_all(root);
  fs::create_directories(root / "L001");
  write_text_file(root / "manifest.json", R"({"lessons": [{"id": "L001", "duration": 960.0}]})");
  write_text_file(root / "L001" / "transcript.txt", "[00:00:01] L: hallo\n");
  auto corpus = load_corpus(root);
  CHECK(corpus.lessons.empty());
  REQUIRE(corpus.load_errors.size() == 1);
  CHECK(corpus.load_errors[0].find("ratings") != std::string::npos);
  fs::remove_all(root);
}
