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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ew/mediascript.hpp"
#include "ew/types.hpp"

namespace ew {

/// Per-face affect estimate: valence and arousal in [-1,1] plus a
/// distribution over (neutral, happy, sad, surprise, fear).
struct FaceAffect {
  double valence = 0.0;
  double arousal = 0.0;
  std::array<double, 5> emotion_probs{};
  std::array<double, 4> bbox{};  // x, y, w, h in frame coordinates
  double confidence = 1.0;

  std::array<double, 7> components() const {
    return {valence, arousal, emotion_probs[0], emotion_probs[1],
            emotion_probs[2], emotion_probs[3], emotion_probs[4]};
  }
};

/// One sampled frame after face-level averaging; `aggregate` is present iff
/// at least one face was detected.
struct FrameAffect {
  double time = 0.0;
  int faces_detected = 0;
  std::optional<std::array<double, 7>> aggregate;
};

/// Opaque references the backends resolve; this module never decodes video.
struct FrameHandle {
  SegmentId segment;
  double time = 0.0;
  std::string media_ref;
};

struct FaceCropHandle {
  FrameHandle frame;
  int face_index = 0;
};

struct FaceDetection {
  FaceCropHandle crop;
  double confidence = 0.0;
};

/// Backend contract: two injected functions. Implementations must tolerate
/// concurrent calls (the pipeline fans segments out across workers).
struct VisualBackend {
  std::string version = "unversioned";
  std::function<std::vector<FaceDetection>(const FrameHandle&)> detect_faces;
  std::function<FaceAffect(const FaceCropHandle&)> estimate_affect;
};

struct VisualOptions {
  double frame_rate = 2.0;         // frames per second after down-sampling
  double confidence_threshold = 0.8;
};

/// Frame times start, start+1/rate, ... strictly below end; a 960 s segment
/// at 2 FPS yields exactly 1920 times. Throws NoVideo when the segment has
/// no video reference.
std::vector<double> sample_frame_times(const Segment& segment, double rate = 2.0);

/// Backend outputs are sanitized rather than trusted: valence/arousal are
/// clamped to [-1,1], negative probabilities are zeroed, and the emotion
/// distribution is renormalized when its sum drifts by more than 1e-6.
/// Each correction appends a warning.
FaceAffect sanitize_affect(FaceAffect affect, std::vector<std::string>* warnings = nullptr);

/// Component-wise mean over detected faces; missing when no face.
FrameAffect aggregate_frame(double time, const std::vector<FaceAffect>& faces);

inline constexpr std::array<double, 7> kNeutralVisualDefault{0.0, 0.0, 0.2, 0.2,
                                                             0.2, 0.2, 0.2};

/// Temporal mean over frames with at least one face. A fully faceless list
/// returns the neutral default with the missing flag set. The mean is
/// computed in value order, so the result is permutation-invariant.
std::pair<std::array<double, 7>, bool> segment_visual_features(
    const std::vector<FrameAffect>& frames);

/// Full per-segment extraction: sample, detect, filter by confidence,
/// estimate, sanitize, aggregate. Throws NoVideo / BackendFailure.
std::pair<std::array<double, 7>, bool> extract_visual(const Segment& segment,
                                                      const VisualBackend& backend,
                                                      const VisualOptions& opts,
                                                      std::vector<std::string>* warnings = nullptr);

/// Deterministic mock driven by a MediaScript; per-face jitter comes from a
/// seeded hash of (segment, frame time, face), never from shared state.
VisualBackend make_scripted_visual_backend(MediaScript script);

}  // namespace ew
