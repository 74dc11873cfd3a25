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

#include "ew/visualfeat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ew/errors.hpp"
#include "ew/parallel.hpp"
#include "ew/util.hpp"

namespace ew {

std::vector<double> sample_frame_times(const Segment& segment, double rate) {
  if (segment.video_ref.empty()) throw NoVideo("segment " + segment.id.str());
  if (rate <= 0.0) throw OutOfRange("frame rate must be positive");
  const double step = 1.0 / rate;
  // floor with an epsilon so exact multiples stay strictly below `end`.
  auto count = static_cast<std::size_t>(std::ceil(segment.duration() * rate - 1e-9));
  std::vector<double> times;
  times.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    times.push_back(segment.start + static_cast<double>(i) * step);
  return times;
}

FaceAffect sanitize_affect(FaceAffect a, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& m) {
    if (warnings) warnings->push_back(m);
  };
  if (a.valence < -1.0 || a.valence > 1.0) {
    warn("valence " + format_double(a.valence) + " clamped");
    a.valence = std::clamp(a.valence, -1.0, 1.0);
  }
  if (a.arousal < -1.0 || a.arousal > 1.0) {
    warn("arousal " + format_double(a.arousal) + " clamped");
    a.arousal = std::clamp(a.arousal, -1.0, 1.0);
  }
  double sum = 0.0;
  bool negative = false;
  for (double& p : a.emotion_probs) {
    if (p < 0.0) {
      p = 0.0;
      negative = true;
    }
    sum += p;
  }
  if (negative) warn("negative emotion probability zeroed");
  if (sum <= 0.0) {
    a.emotion_probs.fill(0.2);
    warn("degenerate emotion distribution replaced by uniform");
  } else if (std::abs(sum - 1.0) > 1e-6) {
    for (double& p : a.emotion_probs) p /= sum;
    warn("emotion distribution renormalized from sum " + format_double(sum));
  }
  return a;
}

FrameAffect aggregate_frame(double time, const std::vector<FaceAffect>& faces) {
  FrameAffect f;
  f.time = time;
  f.faces_detected = static_cast<int>(faces.size());
  if (faces.empty()) return f;
  Matrix m(faces.size(), 7);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    auto c = faces[i].components();
    std::copy(c.begin(), c.end(), m[i]);
  }
  auto means = par::column_means_serial(m, {});
  std::array<double, 7> agg{};
  std::copy(means.begin(), means.end(), agg.begin());
  f.aggregate = agg;
  return f;
}

std::pair<std::array<double, 7>, bool> segment_visual_features(
    const std::vector<FrameAffect>& frames) {
  Matrix m;
  for (const auto& f : frames)
    if (f.aggregate) {
      m.push_row(std::vector<double>(f.aggregate->begin(), f.aggregate->end()));
    }
  if (m.rows == 0) return {kNeutralVisualDefault, true};
  auto means = par::column_means_serial(m, {});
  std::array<double, 7> out{};
  std::copy(means.begin(), means.end(), out.begin());
  return {out, false};
}

std::pair<std::array<double, 7>, bool> extract_visual(const Segment& segment,
                                                      const VisualBackend& backend,
                                                      const VisualOptions& opts,
                                                      std::vector<std::string>* warnings) {
  auto times = sample_frame_times(segment, opts.frame_rate);
  std::vector<FrameAffect> frames;
  frames.reserve(times.size());
  for (double t : times) {
    FrameHandle frame{segment.id, t, segment.video_ref};
    std::vector<FaceDetection> detections;
    try {
      detections = backend.detect_faces(frame);
    } catch (const std::exception& e) {
      throw BackendFailure("detect_faces failed at t=" + format_double(t) + " in " +
                           segment.id.str() + ": " + e.what());
    }
    std::vector<FaceAffect> faces;
    for (const auto& d : detections) {
      if (d.confidence < opts.confidence_threshold) continue;
      FaceAffect a;
      try {
        a = backend.estimate_affect(d.crop);
      } catch (const std::exception& e) {
        throw BackendFailure("estimate_affect failed at t=" + format_double(t) + " in " +
                             segment.id.str() + ": " + e.what());
      }
      faces.push_back(sanitize_affect(a, warnings));
    }
    frames.push_back(aggregate_frame(t, faces));
  }
  return segment_visual_features(frames);
}

VisualBackend make_scripted_visual_backend(MediaScript script) {
  auto shared = std::make_shared<MediaScript>(std::move(script));
  VisualBackend b;
  b.version = "scripted-visual/1";
  b.detect_faces = [shared](const FrameHandle& frame) {
    const SegmentScript* s = shared->find(frame.segment);
    if (!s || !s->visual) return std::vector<FaceDetection>{};
    if (s->visual->fail) throw BackendFailure("scripted failure");
    std::vector<FaceDetection> out;
    auto tkey = static_cast<std::uint64_t>(frame.time * 1000.0);
    for (int i = 0; i < s->visual->faces; ++i) {
      FaceDetection d;
      d.crop = FaceCropHandle{frame, i};
      // Confidences hover near 0.9 with a deterministic wobble.
      d.confidence =
          0.9 + 0.08 * script_noise(shared->seed, tkey, static_cast<std::uint64_t>(i), 1);
      out.push_back(d);
    }
    return out;
  };
  b.estimate_affect = [shared](const FaceCropHandle& crop) {
    const SegmentScript* s = shared->find(crop.frame.segment);
    if (!s || !s->visual) throw BackendFailure("no script for " + crop.frame.segment.str());
    const VisualScript& v = *s->visual;
    auto tkey = static_cast<std::uint64_t>(crop.frame.time * 1000.0);
    auto fkey = static_cast<std::uint64_t>(crop.face_index);
    FaceAffect a;
    a.valence = std::clamp(
        v.valence + v.jitter * script_noise(shared->seed, tkey, fkey, 2), -1.0, 1.0);
    a.arousal = std::clamp(
        v.arousal + v.jitter * script_noise(shared->seed, tkey, fkey, 3), -1.0, 1.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
      double p = v.emotions[k] +
                 0.5 * v.jitter * script_noise(shared->seed, tkey, fkey, 4 + k);
      a.emotion_probs[k] = std::max(0.0, p);
      sum += a.emotion_probs[k];
    }
    if (sum > 0.0)
      for (double& p : a.emotion_probs) p /= sum;
    else
      a.emotion_probs.fill(0.2);
    a.bbox = {0.0, 0.0, 64.0, 64.0};
    a.confidence = 0.95;
    return a;
  };
  return b;
}

}  // namespace ew
