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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ew/ingest.hpp"
#include "ew/mediascript.hpp"
#include "ew/textfeat.hpp"
#include "ew/types.hpp"

namespace ew {

/// Desk-scale verification corpus: latent segment quality drives the
/// transcript's positive-utterance rate, the planted media affect, and the
/// (noisy, integer) rater scores. Noise scales are calibrated so the
/// correlation between the planted text signal and the mean ratings lands at
/// target_corr; everything is deterministic under the seed.
struct SynthSpec {
  int lessons = 20;
  int segments_per_lesson = 3;
  double target_corr = 0.8;
  int raters = 14;
  double utterances_per_minute = 8.0;
  double media_jitter = 0.08;  // per-face / per-window backend noise
  std::uint64_t seed = 7;
};

struct SynthResult {
  Corpus corpus;        // ratings + transcripts, media refs set
  MediaScript script;   // planted backend outputs
  Lexicon lexicon;      // vocabulary the transcripts were composed from
  SynthSpec spec;

  // Per-segment ground truth, in all_segments() order — the test oracles.
  std::vector<double> latent;
  std::vector<double> mean_ratings;
  std::vector<double> planted_pos_rate;  // positive utterances per minute
};

SynthResult generate_synthetic_corpus(const SynthSpec& spec);

/// Materialize in the corpus layout (manifest.json, per-lesson transcripts,
/// ratings, media scripts, stub media files, lexicon.csv, synth_info.json).
void write_synth_corpus(const std::filesystem::path& dir, const SynthResult& result);

}  // namespace ew
