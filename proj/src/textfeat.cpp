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

#include "ew/textfeat.hpp"

#include <algorithm>

#include "ew/errors.hpp"
#include "ew/sha256.hpp"
#include "ew/util.hpp"

namespace ew {

SentimentCategory categorize_polarity(double polarity) {
  if (polarity > 0.0) return SentimentCategory::positive;
  if (polarity < 0.0) return SentimentCategory::negative;
  return SentimentCategory::neutral;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    bool word_char = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word_char) {
      cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Lexicon::Lexicon(std::unordered_map<std::string, double> entries)
    : entries_(std::move(entries)) {
  refresh_version();
}

void Lexicon::refresh_version() {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, v] : entries_) keys.push_back(k + "=" + format_double(v));
  std::sort(keys.begin(), keys.end());
  std::string all;
  for (const auto& k : keys) all += k + "\n";
  version_ = sha256_hex16(all);
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  CsvTable t = read_csv(path);
  int ct = t.col("token"), cp = t.col("polarity");
  if (ct < 0 || cp < 0) throw CorpusLayoutError("lexicon " + path.string() + ": need token,polarity columns");
  std::unordered_map<std::string, double> entries;
  for (const auto& row : t.rows) {
    double p = std::stod(row[static_cast<std::size_t>(cp)]);
    if (p < -1.0 || p > 1.0) throw OutOfRange("lexicon polarity outside [-1,1]");
    entries[lower_ascii(row[static_cast<std::size_t>(ct)])] = p;
  }
  return Lexicon(std::move(entries));
}

const std::vector<std::pair<std::string, double>>& Lexicon::builtin_entries() {
  static const std::vector<std::pair<std::string, double>> entries = {
      {"gut", 0.7},       {"super", 0.9},   {"toll", 0.8},     {"prima", 0.8},
      {"richtig", 0.5},   {"genau", 0.4},   {"perfekt", 1.0},  {"wunderbar", 0.9},
      {"klasse", 0.8},    {"lob", 0.6},     {"freut", 0.6},    {"danke", 0.5},
      {"schlecht", -0.7}, {"falsch", -0.5}, {"leider", -0.3},  {"nein", -0.2},
      {"fehler", -0.4},   {"schlimm", -0.8}, {"langweilig", -0.6}, {"nicht", -0.1},
  };
  return entries;
}

Lexicon Lexicon::builtin_test() {
  std::unordered_map<std::string, double> m;
  for (const auto& [w, p] : builtin_entries()) m[w] = p;
  return Lexicon(std::move(m));
}

double Lexicon::score(const std::string& text) const {
  double sum = 0.0;
  int hits = 0;
  for (const auto& token : tokenize_words(text)) {
    auto it = entries_.find(token);
    if (it != entries_.end()) {
      sum += it->second;
      ++hits;
    }
  }
  return hits ? sum / hits : 0.0;
}

PolarizedUtterance polarize(const Utterance& u, const PolarityScorer& scorer) {
  PolarizedUtterance p;
  p.utterance = u;
  p.polarity = scorer(u.text);
  p.category = categorize_polarity(p.polarity);
  return p;
}

std::array<double, kTextDim> segment_text_features(const Segment& segment,
                                                   const PolarityScorer& scorer) {
  if (segment.duration() <= 0.0) throw ZeroDuration("segment " + segment.id.str());
  const double minutes = segment.duration_minutes();
  long n_pos = 0, n_neu = 0, n_neg = 0;
  double cumulative = 0.0;
  for (const auto& u : segment.utterances) {
    double p = scorer(u.text);
    switch (categorize_polarity(p)) {
      case SentimentCategory::positive: ++n_pos; break;
      case SentimentCategory::neutral: ++n_neu; break;
      case SentimentCategory::negative: ++n_neg; break;
    }
    cumulative += p;
  }
  return {static_cast<double>(n_pos) / minutes, static_cast<double>(n_neu) / minutes,
          static_cast<double>(n_neg) / minutes, cumulative / minutes};
}

}  // namespace ew
