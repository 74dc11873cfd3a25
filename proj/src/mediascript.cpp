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

#include "ew/mediascript.hpp"

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/ingest.hpp"
#include "ew/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ew {

const SegmentScript* MediaScript::find(const SegmentId& id) const {
  auto it = segments.find(id);
  return it == segments.end() ? nullptr : &it->second;
}

MediaScript MediaScript::parse_lesson_json(const LessonId& lesson, const std::string& text) {
  MediaScript out;
  json doc = json::parse(text);
  out.seed = doc.value("seed", std::uint64_t{0});
  for (const auto& [key, body] : doc.at("segments").items()) {
    SegmentId id{lesson, std::stoi(key)};
    SegmentScript s;
    if (body.contains("visual")) {
      const auto& v = body["visual"];
      VisualScript vs;
      vs.faces = v.value("faces", 0);
      vs.valence = v.value("valence", 0.0);
      vs.arousal = v.value("arousal", 0.0);
      if (v.contains("emotions")) vs.emotions = v["emotions"].get<std::array<double, 5>>();
      vs.jitter = v.value("jitter", 0.0);
      vs.fail = v.value("fail", false);
      s.visual = vs;
    }
    if (body.contains("audio")) {
      const auto& a = body["audio"];
      AudioScript as;
      if (a.contains("emotions")) as.emotions = a["emotions"].get<std::array<double, 7>>();
      as.jitter = a.value("jitter", 0.0);
      as.fail = a.value("fail", false);
      s.audio = as;
    }
    out.segments[id] = s;
  }
  return out;
}

std::string MediaScript::lesson_json(const LessonId& lesson) const {
  json doc;
  doc["seed"] = seed;
  doc["segments"] = json::object();
  for (const auto& [id, s] : segments) {
    if (id.lesson != lesson) continue;
    json body;
    if (s.visual) {
      body["visual"] = {{"faces", s.visual->faces},   {"valence", s.visual->valence},
                        {"arousal", s.visual->arousal}, {"emotions", s.visual->emotions},
                        {"jitter", s.visual->jitter},  {"fail", s.visual->fail}};
    }
    if (s.audio) {
      body["audio"] = {{"emotions", s.audio->emotions},
                       {"jitter", s.audio->jitter},
                       {"fail", s.audio->fail}};
    }
    doc["segments"][std::to_string(id.index)] = body;
  }
  return doc.dump(2) + "\n";
}

MediaScript MediaScript::load(const Corpus& corpus) {
  MediaScript merged;
  for (const auto& lesson : corpus.lessons) {
    fs::path p = corpus.root / lesson.id / "media_script.json";
    if (!fs::exists(p)) continue;
    MediaScript one = parse_lesson_json(lesson.id, read_text_file(p));
    merged.seed = one.seed;  // corpora are generated with a single seed
    merged.segments.insert(one.segments.begin(), one.segments.end());
  }
  return merged;
}

double script_noise(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = mix_seed(mix_seed(mix_seed(seed, a), b), c);
  // 53-bit mantissa -> [0,1), then map to [-1,1].
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

}  // namespace ew
