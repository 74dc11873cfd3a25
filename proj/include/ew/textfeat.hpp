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

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ew/types.hpp"

namespace ew {

enum class SentimentCategory { positive, neutral, negative };

/// Sign rule: polarity > 0 is positive, == 0 neutral, < 0 negative.
SentimentCategory categorize_polarity(double polarity);

struct PolarizedUtterance {
  Utterance utterance;
  double polarity = 0.0;  // [-1, 1]
  SentimentCategory category = SentimentCategory::neutral;
};

/// Pluggable per-utterance polarity scorer; must be deterministic and return
/// values in [-1, 1]. The default is the lexicon scorer below; a full
/// morphological scorer can be injected instead.
using PolarityScorer = std::function<double(const std::string&)>;

/// Lexicon-based polarity: tokens are lower-cased ASCII words (bytes >= 0x80
/// are kept, so UTF-8 umlauts stay inside tokens); the utterance score is the
/// mean of the lexicon hits, 0 when nothing matches.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::unordered_map<std::string, double> entries);

  /// File format: CSV rows of (token, polarity) with header token,polarity.
  static Lexicon load(const std::filesystem::path& path);

  /// Small built-in German test lexicon; enough for the offline pipeline.
  static Lexicon builtin_test();
  static const std::vector<std::pair<std::string, double>>& builtin_entries();

  double score(const std::string& text) const;
  std::size_t size() const { return entries_.size(); }
  std::string version() const { return version_; }

  PolarityScorer scorer() const {
    return [*this](const std::string& t) { return score(t); };
  }

 private:
  std::unordered_map<std::string, double> entries_;
  std::string version_;  // content hash, recomputed on load
  void refresh_version();
};

std::vector<std::string> tokenize_words(const std::string& text);

PolarizedUtterance polarize(const Utterance& u, const PolarityScorer& scorer);

/// The 4D text feature: (positive, neutral, negative utterance counts and the
/// cumulative polarity), each divided by the segment duration in minutes.
/// An empty transcript yields all zeros — silence is informative, so there is
/// no missing flag. Throws ZeroDuration.
std::array<double, kTextDim> segment_text_features(const Segment& segment,
                                                   const PolarityScorer& scorer);

}  // namespace ew
