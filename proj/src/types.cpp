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

#include "ew/types.hpp"

#include "ew/errors.hpp"

namespace ew {

SegmentId SegmentId::parse(const std::string& s) {
  auto pos = s.rfind('#');
  if (pos == std::string::npos || pos + 1 >= s.size())
    throw Error("malformed segment id: " + s);
  SegmentId id;
  id.lesson = s.substr(0, pos);
  id.index = std::stoi(s.substr(pos + 1));
  return id;
}

std::array<double, kFusedDim> FeatureVector::fused() const {
  std::array<double, kFusedDim> out{};
  int k = 0;
  for (double v : visual) out[static_cast<std::size_t>(k++)] = v;
  for (double v : audio) out[static_cast<std::size_t>(k++)] = v;
  for (double v : text) out[static_cast<std::size_t>(k++)] = v;
  return out;
}

const std::array<std::string, kFusedDim>& feature_names() {
  static const std::array<std::string, kFusedDim> names = {
      "visual.valence",  "visual.arousal",  "visual.neutral",  "visual.happy",
      "visual.sad",      "visual.surprise", "visual.fear",     "audio.anger",
      "audio.boredom",   "audio.disgust",   "audio.fear",      "audio.happiness",
      "audio.sadness",   "audio.neutral",   "text.pos_rate",   "text.neu_rate",
      "text.neg_rate",   "text.polarity_rate"};
  return names;
}

std::string to_string(Source s) {
  switch (s) {
    case Source::trained_model: return "trained_model";
    case Source::llm_zero_shot: return "llm_zero_shot";
    case Source::ensemble: return "ensemble";
    case Source::human_mean: return "human_mean";
  }
  return "trained_model";
}

Source source_from_string(const std::string& s) {
  if (s == "trained_model") return Source::trained_model;
  if (s == "llm_zero_shot") return Source::llm_zero_shot;
  if (s == "ensemble") return Source::ensemble;
  if (s == "human_mean") return Source::human_mean;
  throw Error("unknown source: " + s);
}

ScoreEstimate mean_human_rating(const Segment& segment) {
  if (segment.ratings.empty()) throw NoRatings("segment " + segment.id.str());
  long sum = 0;
  for (const auto& r : segment.ratings) sum += r.score;
  ScoreEstimate e;
  e.segment = segment.id;
  e.value = static_cast<double>(sum) / static_cast<double>(segment.ratings.size());
  e.source = Source::human_mean;
  return e;
}

}  // namespace ew
