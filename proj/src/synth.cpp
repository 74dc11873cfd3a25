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

#include "ew/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ew {

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "wir",   "jetzt",  "aufgabe", "gleichung", "tafel",  "heft",
      "seite", "rechnen", "und",    "dann",      "also",   "bitte",
      "mal",   "zahl",   "hier",    "wert",      "beispiel"};
  return words;
}

struct ComposePools {
  std::vector<std::string> pos_mild;   // 0 < p <= 0.6
  std::vector<std::string> neg_strong; // p <= -0.6
  std::vector<std::string> neg_mild;   // -0.3 <= p < 0, hedges inside praise
};

std::string compose_utterance(SentimentCategory cat, const ComposePools& pools,
                              std::mt19937_64& rng) {
  const auto& fill = filler_words();
  std::uniform_int_distribution<std::size_t> pick_fill(0, fill.size() - 1);
  std::uniform_int_distribution<int> n_fill(2, 4);
  std::vector<std::string> words;
  int n = n_fill(rng);
  for (int i = 0; i < n; ++i) words.push_back(fill[pick_fill(rng)]);
  auto pick = [&rng](const std::vector<std::string>& pool) {
    std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
    return pool[d(rng)];
  };
  if (cat == SentimentCategory::positive) {
    words.insert(words.begin() + 1, pick(pools.pos_mild));
    // Half of the praise turns carry a hedge ("nicht", "leider", ...): the
    // utterance stays positive (mean of hits > 0) but its polarity shrinks,
    // so the count channel stays cleaner than the cumulative one.
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5)
      words.push_back(pick(pools.neg_mild));
  } else if (cat == SentimentCategory::negative) {
    words.insert(words.begin() + 1, pick(pools.neg_strong));
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

SynthResult generate_synthetic_corpus(const SynthSpec& spec) {
  if (spec.lessons < 1 || spec.segments_per_lesson < 1)
    throw OutOfRange("synth: lessons and segments_per_lesson must be >= 1");
  if (spec.target_corr <= 0.0 || spec.target_corr > 1.0)
    throw OutOfRange("synth: target_corr in (0, 1]");

  SynthResult out;
  out.spec = spec;
  out.lexicon = Lexicon::builtin_test();
  out.script.seed = mix_seed(spec.seed, 0x5c);

  // Composition vocabulary: mild positive words keep the cumulative-polarity
  // channel flat relative to the count channel, strong negative words make
  // the independent negative noise bite it. The scorer still sees the whole
  // lexicon.
  ComposePools pools;
  for (const auto& [w, p] : Lexicon::builtin_entries()) {
    if (p > 0.0 && p <= 0.6) pools.pos_mild.push_back(w);
    if (p <= -0.6) pools.neg_strong.push_back(w);
    if (p < 0.0 && p >= -0.3) pools.neg_mild.push_back(w);
  }

  const int n_seg = spec.lessons * spec.segments_per_lesson;
  const double seg_len = 960.0;
  const double minutes = seg_len / 60.0;

  // Evenly spaced latent qualities over (1, 4), shuffled across segments:
  // a deterministic grid keeps the realized variance close to its target.
  std::vector<double> latent(static_cast<std::size_t>(n_seg));
  for (int i = 0; i < n_seg; ++i)
    latent[static_cast<std::size_t>(i)] = 1.0 + 3.0 * (i + 0.5) / n_seg;
  std::mt19937_64 rng(spec.seed);
  std::shuffle(latent.begin(), latent.end(), rng);

  double v_latent = 0.0, m_latent = 0.0;
  for (double l : latent) m_latent += l;
  m_latent /= n_seg;
  for (double l : latent) v_latent += (l - m_latent) * (l - m_latent);
  v_latent /= n_seg;

  // Noise calibration for corr(pos-rate channel, mean rating) = rho:
  //   (v_L + v_x)(v_L + v_m) = (v_L / rho)^2
  // where v_m is the rating-side variance (rater noise halved by averaging
  // two raters, plus ~1/12 integer-rounding variance per rater) and v_x the
  // feature-side variance. Rater noise is capped at sigma 0.5 so the rounded
  // labels keep all four classes populated; the remainder moves to the
  // feature side.
  const double rho = spec.target_corr;
  const double quant = 1.0 / 24.0;
  const double v_m_all = v_latent * (1.0 / (rho * rho) - 1.0);
  const double v_m_cap = 0.5 * 0.5 / 2.0 + quant;
  const double v_m = std::min(v_m_all, v_m_cap);
  const double sigma_rater = std::sqrt(std::max(0.0, 2.0 * (v_m - quant)));
  const double v_x = std::max(0.0, (v_latent / rho) * (v_latent / rho) / (v_latent + v_m) -
                                       v_latent);
  const double sigma_feature = std::sqrt(v_x);  // in latent units

  // Pre-drawn noise vectors, orthogonalized against the latent and rescaled
  // to their exact target deviation: at 60 segments, raw iid sampling alone
  // would wobble the realized correlation by more than the +-0.05 the
  // corpus promises.
  auto noise_vector = [&](double sigma) {
    std::vector<double> e(static_cast<std::size_t>(n_seg), 0.0);
    if (sigma <= 0.0) return e;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : e) v = gauss(rng);
    double me = 0.0;
    for (double v : e) me += v;
    me /= n_seg;
    for (double& v : e) v -= me;
    double cov = 0.0;
    for (int i = 0; i < n_seg; ++i)
      cov += e[static_cast<std::size_t>(i)] * (latent[static_cast<std::size_t>(i)] - m_latent);
    cov /= n_seg;
    for (int i = 0; i < n_seg; ++i)
      e[static_cast<std::size_t>(i)] -=
          cov / v_latent * (latent[static_cast<std::size_t>(i)] - m_latent);
    double var = 0.0;
    for (double v : e) var += v * v;
    var /= n_seg;
    double scale = sigma / std::sqrt(var);
    for (double& v : e) v *= scale;
    return e;
  };
  const auto rater1_noise = noise_vector(sigma_rater);
  const auto rater2_noise = noise_vector(sigma_rater);
  const auto feature_noise = noise_vector(sigma_feature);

  // Media channels get flatter slopes and stronger segment-level noise than
  // the transcript channel: the planted ordering is text > audio > visual,
  // and only the positive-count rate is nearly noise-free.
  std::normal_distribution<double> media_noise(0.0, 0.08);
  std::normal_distribution<double> media_noise_small(0.0, 0.03);

  int seg_counter = 0;
  for (int li = 0; li < spec.lessons; ++li) {
    LessonRecord lesson;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "SL%03d", li + 1);
    lesson.id = idbuf;
    lesson.duration = seg_len * spec.segments_per_lesson;
    lesson.video_ref = "video.stub";
    lesson.audio_ref = "audio.stub";

    for (int si = 0; si < spec.segments_per_lesson; ++si, ++seg_counter) {
      const double L = latent[static_cast<std::size_t>(seg_counter)];
      const SegmentId sid{lesson.id, si};
      const double seg_start = si * seg_len;

      // --- ratings: two raters, scores rounded onto the 1..4 scale
      int r1 = 2 * seg_counter % spec.raters;
      int r2 = (2 * seg_counter + 1) % spec.raters;
      if (r1 == r2) r2 = (r2 + 1) % spec.raters;
      auto rate = [&](double noise) {
        return std::clamp(static_cast<int>(std::floor(L + noise + 0.5)), 1, 4);
      };
      char rbuf[16];
      std::snprintf(rbuf, sizeof(rbuf), "R%02d", r1 + 1);
      int s1 = rate(rater1_noise[static_cast<std::size_t>(seg_counter)]);
      lesson.ratings_by_segment[si].push_back(Rating{rbuf, s1});
      std::snprintf(rbuf, sizeof(rbuf), "R%02d", r2 + 1);
      int s2 = rate(rater2_noise[static_cast<std::size_t>(seg_counter)]);
      lesson.ratings_by_segment[si].push_back(Rating{rbuf, s2});
      out.mean_ratings.push_back((s1 + s2) / 2.0);
      out.latent.push_back(L);

      // --- transcript: only the positive count tracks L cleanly. Negative
      // counts fluctuate independently (contaminating cumulative polarity)
      // and the neutral padding is rescaled independently (decoupling the
      // neutral rate from the positive rate).
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const int n_base = static_cast<int>(std::round(spec.utterances_per_minute * minutes));
      const double l_observed = L + feature_noise[static_cast<std::size_t>(seg_counter)];
      const double p_pos = std::clamp(0.12 + 0.16 * (l_observed - 1.0), 0.0, 0.95);
      const double p_neg = 0.05 + 0.30 * unit(rng);
      const int n_pos = static_cast<int>(std::round(p_pos * n_base));
      const int n_neg = static_cast<int>(std::round(p_neg * n_base));
      const int n_neu = std::max(
          0, static_cast<int>(std::round((n_base - n_pos - n_neg) * (0.7 + 0.6 * unit(rng)))));
      const int n_utt = n_pos + n_neg + n_neu;
      out.planted_pos_rate.push_back(n_pos / minutes);

      std::vector<SentimentCategory> cats;
      for (int i = 0; i < n_pos; ++i) cats.push_back(SentimentCategory::positive);
      for (int i = 0; i < n_neg; ++i) cats.push_back(SentimentCategory::negative);
      for (int i = 0; i < n_neu; ++i) cats.push_back(SentimentCategory::neutral);
      std::shuffle(cats.begin(), cats.end(), rng);

      for (int j = 0; j < n_utt; ++j) {
        Utterance u;
        u.start_time = seg_start + std::floor(j * seg_len / n_utt);
        u.speaker = (j % 2 == 0) ? "L" : ("S0" + std::to_string(1 + j % 5));
        u.text = compose_utterance(cats[static_cast<std::size_t>(j)], pools, rng);
        lesson.utterances.push_back(std::move(u));
      }

      // --- media scripts: affect channels affine in L plus mild noise
      SegmentScript ss;
      VisualScript vs;
      vs.faces = 3;
      vs.valence = std::clamp(0.05 + 0.04 * (L - 1.0) + media_noise(rng), -1.0, 1.0);
      vs.arousal = std::clamp(0.10 + 0.01 * (L - 1.0) + media_noise(rng), -1.0, 1.0);
      double happy = std::clamp(0.12 + 0.03 * (L - 1.0) + media_noise(rng), 0.01, 0.9);
      double sad = std::clamp(0.08 + media_noise_small(rng), 0.01, 0.9);
      double surprise = std::clamp(0.06 + media_noise_small(rng), 0.01, 0.9);
      double fear = std::clamp(0.05 + media_noise_small(rng), 0.01, 0.9);
      vs.emotions = {std::max(0.01, 1.0 - happy - sad - surprise - fear), happy, sad,
                     surprise, fear};
      vs.jitter = spec.media_jitter;
      ss.visual = vs;

      AudioScript as;
      double happiness = std::clamp(0.10 + 0.04 * (L - 1.0) + media_noise(rng), 0.01, 0.9);
      double anger = std::clamp(0.12 - 0.01 * (L - 1.0) + media_noise_small(rng), 0.01, 0.9);
      double boredom = std::clamp(0.10 + media_noise_small(rng), 0.01, 0.9);
      double disgust = std::clamp(0.05 + media_noise_small(rng), 0.01, 0.9);
      double afear = std::clamp(0.05 + media_noise_small(rng), 0.01, 0.9);
      double sadness = std::clamp(0.08 + media_noise_small(rng), 0.01, 0.9);
      double neutral = std::max(0.01, 1.0 - happiness - anger - boredom - disgust - afear - sadness);
      as.emotions = {anger, boredom, disgust, afear, happiness, sadness, neutral};
      // Normalize so the planted distribution is exact.
      double sum = 0.0;
      for (double v : as.emotions) sum += v;
      for (double& v : as.emotions) v /= sum;
      as.jitter = spec.media_jitter;
      ss.audio = as;

      out.script.segments[sid] = ss;
    }
    out.corpus.lessons.push_back(std::move(lesson));
  }
  return out;
}

void write_synth_corpus(const fs::path& dir, const SynthResult& result) {
  fs::create_directories(dir);

  json manifest;
  manifest["lessons"] = json::array();
  for (const auto& lesson : result.corpus.lessons) {
    manifest["lessons"].push_back({{"id", lesson.id},
                                   {"duration", lesson.duration},
                                   {"video", "video.stub"},
                                   {"audio", "audio.stub"}});
    const fs::path ldir = dir / lesson.id;
    fs::create_directories(ldir);
    write_text_file(ldir / "transcript.txt", format_transcript(lesson.utterances));

    std::vector<std::vector<std::string>> rows;
    for (const auto& [idx, ratings] : lesson.ratings_by_segment)
      for (const auto& r : ratings)
        rows.push_back({std::to_string(idx), r.rater, std::to_string(r.score)});
    write_csv(ldir / "ratings.csv", {"segment_index", "rater_id", "score"}, rows);

    write_text_file(ldir / "media_script.json", result.script.lesson_json(lesson.id));
    write_text_file(ldir / "video.stub", "synthetic media placeholder\n");
    write_text_file(ldir / "audio.stub", "synthetic media placeholder\n");
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  // Lexicon used to compose the transcripts, for the extract stage.
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [w, p] : Lexicon::builtin_entries())
      rows.push_back({w, format_double(p)});
    write_csv(dir / "lexicon.csv", {"token", "polarity"}, rows);
  }

  json info = {{"seed", result.spec.seed},
               {"lessons", result.spec.lessons},
               {"segments_per_lesson", result.spec.segments_per_lesson},
               {"target_corr", result.spec.target_corr},
               {"raters", result.spec.raters},
               {"utterances_per_minute", result.spec.utterances_per_minute},
               {"media_jitter", result.spec.media_jitter}};
  write_text_file(dir / "synth_info.json", info.dump(2) + "\n");
}

}  // namespace ew
