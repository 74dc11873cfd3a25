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
#include <map>
#include <optional>
#include <string>

#include "ew/types.hpp"

namespace ew {

struct Corpus;

// Scripted media backends replace the pretrained video/audio networks for
// offline runs: per segment, a media_script.json plants the affect profile
// the mock detector/embedder expands deterministically.

struct VisualScript {
  int faces = 0;
  double valence = 0.0;
  double arousal = 0.0;
  std::array<double, 5> emotions{1.0, 0.0, 0.0, 0.0, 0.0};  // neutral..fear
  double jitter = 0.0;  // half-width of the per-face deterministic noise
  bool fail = false;    // simulate a corrupt media file
};

struct AudioScript {
  std::array<double, 7> emotions{1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7,
                                 1.0 / 7, 1.0 / 7, 1.0 / 7};  // anger..neutral
  double jitter = 0.0;
  bool fail = false;
};

struct SegmentScript {
  std::optional<VisualScript> visual;
  std::optional<AudioScript> audio;
};

struct MediaScript {
  std::map<SegmentId, SegmentScript> segments;
  std::uint64_t seed = 0;  // jitter stream

  const SegmentScript* find(const SegmentId& id) const;

  /// Reads <root>/<lesson>/media_script.json for every lesson that has one.
  static MediaScript load(const Corpus& corpus);

  static MediaScript parse_lesson_json(const LessonId& lesson, const std::string& text);
  std::string lesson_json(const LessonId& lesson) const;
};

/// Deterministic uniform [-1, 1] stream used by the scripted backends;
/// reproducible across runs and thread counts.
double script_noise(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace ew
