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
#include <optional>
#include <string>
#include <vector>

#include "ew/mediascript.hpp"
#include "ew/mlp.hpp"
#include "ew/types.hpp"

namespace ew {

/// Emotion label order of the 7-way speech distribution.
inline constexpr std::array<const char*, 7> kSpeechEmotions = {
    "anger", "boredom", "disgust", "fear", "happiness", "sadness", "neutral"};

struct AudioWindow {
  SegmentId segment;
  double start = 0.0;     // seconds from lesson start
  double duration = 5.0;  // (0, 5]
  std::string waveform_ref;
};

struct SpeechEmotionDist {
  std::array<double, 7> probs{};
};

/// Backend contract: one injected embedding function of fixed width.
struct AudioBackend {
  std::string version = "unversioned";
  int embedding_dim = 0;
  std::function<std::vector<double>(const AudioWindow&)> embed;
};

/// Consecutive non-overlapping windows; a final partial window is kept when
/// it is at least 1 s long, dropped otherwise. A 960 s segment yields exactly
/// 192 windows. Throws NoAudio when the segment has no audio reference.
std::vector<AudioWindow> window_audio(const Segment& segment, double window_seconds = 5.0);

/// Run the backend and enforce its declared width (DimensionMismatch).
std::vector<double> embed_window(const AudioBackend& backend, const AudioWindow& window);

/// Labeled utterance embeddings for training the emotion head.
/// CSV format: header label,e0,e1,...,e{d-1}; labels are 0-based indices.
struct LabeledEmbeddings {
  int dim = 0;
  int n_classes = 0;
  Matrix x;
  std::vector<int> labels;

  static LabeledEmbeddings load(const std::filesystem::path& path);
};

/// The trained classifier applied to every window embedding.
class EmotionHead {
 public:
  struct Meta {
    std::uint64_t split_seed = 0;
    double test_accuracy = 0.0;
    int hidden = 128;
    int n_classes = 7;
    int input_dim = 0;
  };

  EmotionHead() = default;
  EmotionHead(Mlp net, Meta meta) : net_(std::move(net)), meta_(meta) {}

  std::vector<double> classify(const std::vector<double>& embedding) const;
  const Meta& meta() const { return meta_; }
  const Mlp& net() const { return net_; }

  void save(const std::filesystem::path& path) const;
  static EmotionHead load(const std::filesystem::path& path);

  /// Deterministic head for the scripted backend: the embedding's first
  /// n_classes components are treated as logits. No training involved.
  static EmotionHead linear_probe(int input_dim, int n_classes = 7);

 private:
  Mlp net_;
  Meta meta_;
};

struct EmotionHeadOptions {
  int hidden = 128;
  double train_fraction = 0.8;   // remainder is the held-out test split
  double validation_fraction = 0.1;  // of the training portion, early stopping
  int epochs = 300;
  double learning_rate = 0.02;
  double l2 = 1e-4;
};

/// Seeded 80/20 split, early-stopped training, held-out accuracy recorded in
/// the metadata. Throws InsufficientData when any class has fewer than two
/// training examples.
EmotionHead train_emotion_head(const LabeledEmbeddings& corpus, std::uint64_t split_seed,
                               const EmotionHeadOptions& opts = {});

/// 7-way distribution for one window; DimensionMismatch on width or on a
/// head that is not 7-way.
SpeechEmotionDist classify_window(const EmotionHead& head, const std::vector<double>& embedding);

inline constexpr std::array<double, 7> kUniformAudioDefault{
    1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7};

/// Temporal mean over window distributions, value-ordered so the result is
/// permutation-invariant; empty input yields the uniform default + flag.
std::pair<std::array<double, 7>, bool> segment_audio_features(
    const std::vector<SpeechEmotionDist>& dists);

/// Full per-segment extraction: window, embed, classify, average.
std::pair<std::array<double, 7>, bool> extract_audio(const Segment& segment,
                                                     const AudioBackend& backend,
                                                     const EmotionHead& head,
                                                     double window_seconds = 5.0);

/// Scripted backend: each window expresses one emotion drawn from the
/// planted segment distribution (seeded, deterministic); the embedding
/// carries the corresponding logits in its first 7 components plus hash
/// noise. Pairs with EmotionHead::linear_probe or a head trained on
/// scripted_labeled_embeddings.
AudioBackend make_scripted_audio_backend(MediaScript script, int embedding_dim = 24);

/// Synthetic labeled corpus drawn from the same embedding scheme as the
/// scripted backend; linearly separable for jitter below ~0.5.
LabeledEmbeddings scripted_labeled_embeddings(int per_class, int embedding_dim,
                                              double jitter, std::uint64_t seed);

}  // namespace ew
