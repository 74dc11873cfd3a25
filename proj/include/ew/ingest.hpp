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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ew/types.hpp"

namespace ew {

/// One lesson as loaded from disk, before segmentation.
struct LessonRecord {
  LessonId id;
  double duration = 0.0;  // seconds; authentic lessons run 2400-5400 s
  std::vector<Utterance> utterances;
  std::string video_ref;
  std::string audio_ref;
  std::map<int, std::vector<Rating>> ratings_by_segment;
  bool media_missing = false;
};

struct Corpus {
  std::vector<LessonRecord> lessons;
  std::filesystem::path root;
  std::vector<std::string> load_errors;  // per-lesson problems, non-fatal
};

/// Parse `[hh:mm:ss] SPEAKER: text` lines. Blank lines are skipped; a line
/// that does not match throws ParseError with its 1-based line number.
/// Decreasing timestamps are appended to `warnings` instead of failing, as
/// real transcripts contain corrections.
std::vector<Utterance> parse_transcript(const std::string& text,
                                        std::vector<std::string>* warnings = nullptr);

std::string format_transcript(const std::vector<Utterance>& utterances);

/// 16-minute slicing with the short-tail merge rule: every non-final segment
/// is 960 s; a final tail under 480 s is merged into its predecessor; a
/// lesson shorter than 960 s becomes one segment. Utterances land in the
/// segment containing their start_time (boundary times belong to the segment
/// starting there); ratings attach by post-merge segment index.
std::vector<Segment> segment_lesson(const LessonRecord& lesson);

/// Boundary times only — the arithmetic core of segment_lesson, used by the
/// coverage property tests. Returns k+1 boundaries covering [0, duration).
std::vector<double> segment_boundaries(double duration);

/// Corpus layout: <root>/manifest.json listing lessons; per lesson
/// <root>/<lesson_id>/transcript.txt and ratings.csv, optional media files
/// and media_script.json for the scripted backends. Lessons with missing
/// media load with empty refs and are flagged; per-lesson errors are
/// collected in Corpus::load_errors, not thrown. A missing or malformed
/// manifest throws CorpusLayoutError.
Corpus load_corpus(const std::filesystem::path& root);

/// All segments of every lesson, in manifest order.
std::vector<Segment> all_segments(const Corpus& corpus);

}  // namespace ew
