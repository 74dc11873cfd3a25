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

#include "ew/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ew {

namespace {
constexpr double kSegmentLen = 960.0;  // 16 minutes
constexpr double kMinTail = 480.0;     // 8 minutes
}  // namespace

std::vector<Utterance> parse_transcript(const std::string& text,
                                        std::vector<std::string>* warnings) {
  std::vector<Utterance> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  double prev_time = -1.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line.front() != '[') throw ParseError(line_no, "expected '[hh:mm:ss]' prefix");
    auto close = line.find(']');
    if (close == std::string::npos) throw ParseError(line_no, "unterminated timestamp");
    double t;
    try {
      t = parse_hms(line.substr(1, close - 1));
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    auto colon = line.find(':', close + 1);
    if (colon == std::string::npos) throw ParseError(line_no, "missing speaker separator ':'");
    Utterance u;
    u.start_time = t;
    u.speaker = trim(line.substr(close + 1, colon - close - 1));
    if (u.speaker.empty()) throw ParseError(line_no, "empty speaker id");
    u.text = trim(line.substr(colon + 1));
    // Parenthesized turns like "(lacht)" are non-verbal annotations.
    u.nonverbal = u.text.empty() ||
                  (u.text.size() >= 2 && u.text.front() == '(' && u.text.back() == ')');
    if (prev_time >= 0.0 && t < prev_time && warnings)
      warnings->push_back("NonMonotonicTime at line " + std::to_string(line_no) + ": " +
                          format_hms(t) + " after " + format_hms(prev_time));
    prev_time = t;
    out.push_back(std::move(u));
  }
  return out;
}

std::string format_transcript(const std::vector<Utterance>& utterances) {
  std::string out;
  for (const auto& u : utterances) {
    out += "[" + format_hms(u.start_time) + "] " + u.speaker + ": " + u.text + "\n";
  }
  return out;
}

std::vector<double> segment_boundaries(double duration) {
  if (duration <= 0.0) throw ZeroDuration("lesson duration must be positive");
  std::vector<double> b{0.0};
  if (duration < kSegmentLen) {
    b.push_back(duration);
    return b;
  }
  auto n_full = static_cast<std::size_t>(std::floor(duration / kSegmentLen));
  double tail = duration - kSegmentLen * static_cast<double>(n_full);
  std::size_t full_kept = n_full;
  if (tail > 0.0 && tail < kMinTail) full_kept = n_full - 1;  // merge short tail
  for (std::size_t i = 1; i <= full_kept; ++i) b.push_back(kSegmentLen * static_cast<double>(i));
  if (b.back() < duration) b.push_back(duration);
  return b;
}

std::vector<Segment> segment_lesson(const LessonRecord& lesson) {
  auto bounds = segment_boundaries(lesson.duration);
  std::vector<Segment> segments;
  segments.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    Segment s;
    s.id = SegmentId{lesson.id, static_cast<int>(i)};
    s.start = bounds[i];
    s.end = bounds[i + 1];
    s.video_ref = lesson.video_ref;
    s.audio_ref = lesson.audio_ref;
    auto it = lesson.ratings_by_segment.find(static_cast<int>(i));
    if (it != lesson.ratings_by_segment.end()) s.ratings = it->second;
    segments.push_back(std::move(s));
  }
  // Assign each utterance by start_time; boundary times belong to the
  // segment starting there, times beyond the end go to the final segment.
  for (const auto& u : lesson.utterances) {
    std::size_t k = segments.size() - 1;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      if (u.start_time >= bounds[i] && u.start_time < bounds[i + 1]) {
        k = i;
        break;
      }
    }
    segments[k].utterances.push_back(u);
  }
  return segments;
}

namespace {

LessonRecord load_lesson(const fs::path& root, const json& entry) {
  LessonRecord lesson;
  lesson.id = entry.at("id").get<std::string>();
  lesson.duration = entry.at("duration").get<double>();
  const fs::path dir = root / lesson.id;

  std::vector<std::string> warnings;
  lesson.utterances = parse_transcript(read_text_file(dir / "transcript.txt"), &warnings);

  const fs::path ratings_path = dir / "ratings.csv";
  if (!fs::exists(ratings_path))
    throw CorpusLayoutError("missing ratings file: " + ratings_path.string());
  CsvTable t = read_csv(ratings_path);
  int ci = t.col("segment_index"), cr = t.col("rater_id"), cs = t.col("score");
  if (ci < 0 || cr < 0 || cs < 0)
    throw CorpusLayoutError("ratings.csv for " + lesson.id + ": missing columns");
  for (const auto& row : t.rows) {
    int idx = std::stoi(row[static_cast<std::size_t>(ci)]);
    int score = std::stoi(row[static_cast<std::size_t>(cs)]);
    if (score < 1 || score > 4)
      throw CorpusLayoutError("ratings.csv for " + lesson.id + ": score out of 1..4");
    lesson.ratings_by_segment[idx].push_back(Rating{row[static_cast<std::size_t>(cr)], score});
  }

  auto resolve_media = [&](const char* key) -> std::string {
    if (!entry.contains(key) || entry.at(key).is_null()) return {};
    std::string rel = entry.at(key).get<std::string>();
    fs::path p = dir / rel;
    if (!fs::exists(p)) {
      lesson.media_missing = true;
      return {};
    }
    return p.string();
  };
  lesson.video_ref = resolve_media("video");
  lesson.audio_ref = resolve_media("audio");
  return lesson;
}

}  // namespace

Corpus load_corpus(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path))
    throw CorpusLayoutError("missing manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw CorpusLayoutError("malformed manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("lessons") || !manifest["lessons"].is_array())
    throw CorpusLayoutError("manifest.json must contain a \"lessons\" array");

  Corpus corpus;
  corpus.root = root;
  for (const auto& entry : manifest["lessons"]) {
    try {
      corpus.lessons.push_back(load_lesson(root, entry));
    } catch (const std::exception& e) {
      std::string id = entry.contains("id") ? entry["id"].get<std::string>() : "?";
      corpus.load_errors.push_back(id + ": " + e.what());
    }
  }
  return corpus;
}

std::vector<Segment> all_segments(const Corpus& corpus) {
  std::vector<Segment> out;
  for (const auto& lesson : corpus.lessons) {
    auto segs = segment_lesson(lesson);
    out.insert(out.end(), segs.begin(), segs.end());
  }
  return out;
}

}  // namespace ew
