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
#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace ew {

// Identifier conventions: speaker "L" is the teacher, "S<nn>" a student.
using LessonId = std::string;
using RaterId = std::string;
using SpeakerId = std::string;

inline bool is_teacher(const SpeakerId& s) { return s == "L"; }

/// Lesson id plus zero-based segment index; unique within a corpus.
struct SegmentId {
  LessonId lesson;
  int index = 0;

  auto operator<=>(const SegmentId&) const = default;

  std::string str() const { return lesson + "#" + std::to_string(index); }
  static SegmentId parse(const std::string& s);
};

/// One speaker turn. Times are seconds from lesson start; `nonverbal` marks
/// annotation-only turns such as "(lacht)", the only case where empty text
/// is allowed.
struct Utterance {
  double start_time = 0.0;
  SpeakerId speaker;
  std::string text;
  bool nonverbal = false;

  bool operator==(const Utterance&) const = default;
};

struct Rating {
  RaterId rater;
  int score = 0;  // 1..4

  bool operator==(const Rating&) const = default;
};

/// One rated slice of a lesson. Non-final segments are exactly 960 s; the
/// final one lands in [480, 1440) after the tail-merge rule, except when the
/// whole lesson is shorter than 960 s. Typically two ratings per segment;
/// single-rated segments are tolerated (IRR skips them).
struct Segment {
  SegmentId id;
  double start = 0.0;
  double end = 0.0;
  std::string video_ref;  // empty = no media
  std::string audio_ref;
  std::vector<Utterance> utterances;
  std::vector<Rating> ratings;

  double duration() const { return end - start; }
  double duration_minutes() const { return (end - start) / 60.0; }
};

struct ModalityFlags {
  bool visual_missing = false;
  bool audio_missing = false;

  bool operator==(const ModalityFlags&) const = default;
};

constexpr int kVisualDim = 7;
constexpr int kAudioDim = 7;
constexpr int kTextDim = 4;
constexpr int kFusedDim = kVisualDim + kAudioDim + kTextDim;  // 18

/// The fused per-segment representation: 7 visual (valence, arousal, five
/// emotion probabilities), 7 audio (seven emotion probabilities), 4 text
/// (per-minute rates). Missing-modality defaults are recorded in `flags`.
struct FeatureVector {
  std::array<double, kVisualDim> visual{};
  std::array<double, kAudioDim> audio{};
  std::array<double, kTextDim> text{};
  ModalityFlags flags;

  std::array<double, kFusedDim> fused() const;

  bool operator==(const FeatureVector&) const = default;
};

/// Canonical order of the fused features; "text.pos_rate" is index 14.
const std::array<std::string, kFusedDim>& feature_names();

enum class Source { trained_model, llm_zero_shot, ensemble, human_mean };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

/// One model's (or the raters') estimate for a segment.
struct ScoreEstimate {
  SegmentId segment;
  double value = 0.0;  // in [1, 4]
  std::optional<int> rounded;
  Source source = Source::trained_model;
  std::string reasoning;  // optional, LLM annotations only
};

/// Arithmetic mean of the human ratings; the ground truth for every model.
/// Throws NoRatings when the list is empty.
ScoreEstimate mean_human_rating(const Segment& segment);

}  // namespace ew
