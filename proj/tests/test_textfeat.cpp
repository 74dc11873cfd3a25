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
#include "ew/textfeat.hpp"
#include "ew/util.hpp"

using namespace ew;

TEST_CASE("empty text scores zero") {
  Lexicon lex({{"gut", 0.7}});
  CHECK(lex.score("") == 0.0);
  CHECK(lex.score("unbekannte woerter ueberall") == 0.0);
}

TEST_CASE("single-entry lexicon hit") {
  Lexicon lex({{"gut", 0.7}});
  CHECK(lex.score("gut") == 0.7);
  CHECK(lex.score("Gut") == 0.7);  // ASCII case folding
  CHECK(lex.score("das war gut heute") == 0.7);
}

TEST_CASE("multi-hit polarity is the mean of hits") {
  Lexicon lex({{"gut", 0.7}, {"schlecht", -0.7}});
  CHECK(lex.score("gut schlecht") == 0.0);
  Lexicon lex2({{"gut", 0.8}, {"schlecht", -0.2}});
  CHECK(lex2.score("gut schlecht") == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("tokenizer keeps UTF-8 bytes inside words") {
  auto tokens = tokenize_words("Schön! war's, schön.");
  REQUIRE(tokens.size() == 4);
  CHECK(tokens[0] == "schön");
  CHECK(tokens[3] == "schön");
}

TEST_CASE("categorization follows the sign rule") {
  CHECK(categorize_polarity(0.3) == SentimentCategory::positive);
  CHECK(categorize_polarity(0.0) == SentimentCategory::neutral);
  CHECK(categorize_polarity(-0.1) == SentimentCategory::negative);
}

namespace {
Segment segment_with(double duration, const std::vector<std::string>& texts) {
  Segment s;
  s.id = {"L001", 0};
  s.start = 0;
  s.end = duration;
  for (std::size_t i = 0; i < texts.size(); ++i)
    s.utterances.push_back({static_cast<double>(i), i % 2 ? "S01" : "L", texts[i], false});
  return s;
}
}  // namespace

TEST_CASE("segment_text_features on the worked 16-minute example") {
  // Polarities (+0.5, 0, -0.2, +0.1) -> counts (2 pos, 1 neu, 1 neg),
  // cumulative 0.4, divided by 16 minutes.
  Lexicon lex({{"lob", 0.5}, {"tadel", -0.2}, {"fein", 0.1}});
  auto s = segment_with(960, {"lob", "nichts", "tadel", "fein"});
  auto f = segment_text_features(s, lex.scorer());
  CHECK(f[0] == 2.0 / 16.0);
  CHECK(f[1] == 1.0 / 16.0);
  CHECK(f[2] == 1.0 / 16.0);
  CHECK(f[3] == doctest::Approx(0.4 / 16.0).epsilon(1e-15));
}

TEST_CASE("empty transcript yields all zeros, no flag concept") {
  Lexicon lex({{"gut", 0.7}});
  auto f = segment_text_features(segment_with(960, {}), lex.scorer());
  CHECK(f == std::array<double, 4>{0, 0, 0, 0});
}

TEST_CASE("zero duration is rejected") {
  Lexicon lex({{"gut", 0.7}});
  Segment s = segment_with(0, {"gut"});
  CHECK_THROWS_AS(segment_text_features(s, lex.scorer()), ZeroDuration);
}

TEST_CASE("duration normalization scales by 16/d exactly") {
  Lexicon lex({{"lob", 0.5}, {"tadel", -0.2}, {"fein", 0.1}});
  auto texts = std::vector<std::string>{"lob", "nichts", "tadel", "fein", "lob lob"};
  auto f16 = segment_text_features(segment_with(960, texts), lex.scorer());
  auto f20 = segment_text_features(segment_with(1200, texts), lex.scorer());
  for (int i = 0; i < 4; ++i) {
    // f16 * 16 recovers the raw quantity exactly (division by a power of 2),
    // so the d-minute value must match bit for bit.
    CHECK(f20[static_cast<std::size_t>(i)] == (f16[static_cast<std::size_t>(i)] * 16.0) / 20.0);
  }
}

TEST_CASE("counts and cumulative polarity match a brute-force recount") {
  Lexicon lex = Lexicon::builtin_test();
  auto scorer = lex.scorer();
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> n_utt(0, 60);
  std::uniform_int_distribution<int> pick(0, 5);
  const std::vector<std::string> pool = {"gut gemacht", "schlecht",      "heute rechnen wir",
                                         "super toll",  "leider falsch", "aufgabe drei"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> texts;
    int n = n_utt(rng);
    for (int i = 0; i < n; ++i) texts.push_back(pool[static_cast<std::size_t>(pick(rng))]);
    Segment s = segment_with(960, texts);
    auto f = segment_text_features(s, scorer);

    long pos = 0, neu = 0, neg = 0;
    double cum = 0;
    for (const auto& t : texts) {
      double p = scorer(t);
      if (p > 0) ++pos;
      else if (p < 0) ++neg;
      else ++neu;
      cum += p;
    }
    CHECK(pos + neu + neg == n);
    CHECK(f[0] == doctest::Approx(pos / 16.0).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(neu / 16.0).epsilon(1e-12));
    CHECK(f[2] == doctest::Approx(neg / 16.0).epsilon(1e-12));
    CHECK(f[3] == doctest::Approx(cum / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("cumulative polarity is additive over any partition") {
  Lexicon lex = Lexicon::builtin_test();
  auto scorer = lex.scorer();
  std::vector<std::string> texts = {"gut", "schlecht", "egal", "super toll", "leider"};
  Segment whole = segment_with(960, texts);
  auto fw = segment_text_features(whole, scorer);
  for (std::size_t cut = 0; cut <= texts.size(); ++cut) {
    std::vector<std::string> a(texts.begin(), texts.begin() + static_cast<long>(cut));
    std::vector<std::string> b(texts.begin() + static_cast<long>(cut), texts.end());
    auto fa = segment_text_features(segment_with(960, a), scorer);
    auto fb = segment_text_features(segment_with(960, b), scorer);
    for (int i = 0; i < 4; ++i)
      CHECK(fw[static_cast<std::size_t>(i)] ==
            doctest::Approx(fa[static_cast<std::size_t>(i)] + fb[static_cast<std::size_t>(i)])
                .epsilon(1e-12));
  }
}

TEST_CASE("lexicon file round-trip") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "ew_lexicon_test.csv";
  write_csv(p, {"token", "polarity"}, {{"gut", "0.7"}, {"schlecht", "-0.7"}});
  Lexicon lex = Lexicon::load(p);
  CHECK(lex.size() == 2);
  CHECK(lex.score("gut") == 0.7);
  CHECK_FALSE(lex.version().empty());
  fs::remove(p);
}
