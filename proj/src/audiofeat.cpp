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

#include "ew/audiofeat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/parallel.hpp"
#include "ew/sha256.hpp"
#include "ew/util.hpp"

using nlohmann::json;

namespace ew {

std::vector<AudioWindow> window_audio(const Segment& segment, double window_seconds) {
  if (segment.audio_ref.empty()) throw NoAudio("segment " + segment.id.str());
  if (window_seconds <= 0.0) throw OutOfRange("window length must be positive");
  std::vector<AudioWindow> out;
  double t = segment.start;
  while (t < segment.end - 1e-9) {
    double len = std::min(window_seconds, segment.end - t);
    if (len < window_seconds && len < 1.0) break;  // drop sub-second tails
    out.push_back(AudioWindow{segment.id, t, len, segment.audio_ref});
    t += len;
  }
  return out;
}

std::vector<double> embed_window(const AudioBackend& backend, const AudioWindow& window) {
  std::vector<double> e = backend.embed(window);
  if (static_cast<int>(e.size()) != backend.embedding_dim)
    throw DimensionMismatch("embedding width " + std::to_string(e.size()) + ", declared " +
                            std::to_string(backend.embedding_dim));
  return e;
}

LabeledEmbeddings LabeledEmbeddings::load(const std::filesystem::path& path) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "label")
    throw CorpusLayoutError("labeled embeddings: first column must be `label`");
  LabeledEmbeddings out;
  out.dim = static_cast<int>(t.header.size()) - 1;
  for (const auto& row : t.rows) {
    out.labels.push_back(std::stoi(row[0]));
    std::vector<double> e;
    e.reserve(static_cast<std::size_t>(out.dim));
    for (std::size_t i = 1; i < row.size(); ++i) e.push_back(std::stod(row[i]));
    out.x.push_row(e);
  }
  out.n_classes = out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  return out;
}

std::vector<double> EmotionHead::classify(const std::vector<double>& embedding) const {
  if (static_cast<int>(embedding.size()) != meta_.input_dim)
    throw DimensionMismatch("embedding width " + std::to_string(embedding.size()) +
                            " vs head input " + std::to_string(meta_.input_dim));
  return net_.predict_proba(embedding);
}

void EmotionHead::save(const std::filesystem::path& path) const {
  json j;
  j["format"] = "emotion-head/1";
  j["meta"] = {{"split_seed", meta_.split_seed}, {"test_accuracy", meta_.test_accuracy},
               {"hidden", meta_.hidden},         {"n_classes", meta_.n_classes},
               {"input_dim", meta_.input_dim}};
  j["net"] = net_.to_json();
  write_text_file(path, j.dump(2) + "\n");
}

EmotionHead EmotionHead::load(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path));
  Meta m;
  m.split_seed = j["meta"]["split_seed"].get<std::uint64_t>();
  m.test_accuracy = j["meta"]["test_accuracy"].get<double>();
  m.hidden = j["meta"]["hidden"].get<int>();
  m.n_classes = j["meta"]["n_classes"].get<int>();
  m.input_dim = j["meta"]["input_dim"].get<int>();
  return EmotionHead(Mlp::from_json(j["net"]), m);
}

EmotionHead EmotionHead::linear_probe(int input_dim, int n_classes) {
  // Identity map onto the first n_classes embedding components, built as a
  // wide near-linear tanh pair so the standard Mlp container can hold it.
  if (input_dim < n_classes) throw DimensionMismatch("probe: input_dim < n_classes");
  Mlp::Config cfg;
  cfg.inputs = input_dim;
  cfg.hidden = n_classes;
  cfg.outputs = n_classes;
  cfg.softmax_output = true;
  cfg.seed = 0;
  Mlp net(cfg);
  // w1[j][k] = small * (k == j), w2[o][j] = big * (o == j): tanh stays in its
  // linear region and the composition recovers the logit scale.
  const double shrink = 1e-3, grow = 1e3;
  json j = net.to_json();
  std::vector<double> w1(static_cast<std::size_t>(n_classes * input_dim), 0.0);
  std::vector<double> w2(static_cast<std::size_t>(n_classes * n_classes), 0.0);
  for (int q = 0; q < n_classes; ++q) {
    w1[static_cast<std::size_t>(q * input_dim + q)] = shrink;
    w2[static_cast<std::size_t>(q * n_classes + q)] = grow;
  }
  j["w1"] = w1;
  j["b1"] = std::vector<double>(static_cast<std::size_t>(n_classes), 0.0);
  j["w2"] = w2;
  j["b2"] = std::vector<double>(static_cast<std::size_t>(n_classes), 0.0);
  Meta meta;
  meta.split_seed = 0;
  meta.test_accuracy = 1.0;
  meta.hidden = n_classes;
  meta.n_classes = n_classes;
  meta.input_dim = input_dim;
  return EmotionHead(Mlp::from_json(j), meta);
}

EmotionHead train_emotion_head(const LabeledEmbeddings& corpus, std::uint64_t split_seed,
                               const EmotionHeadOptions& opts) {
  if (corpus.x.rows < 5) throw InsufficientData("labeled corpus too small");
  const std::size_t n = corpus.x.rows;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto n_train = static_cast<std::size_t>(
      std::floor(opts.train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<int> train_class_count(static_cast<std::size_t>(corpus.n_classes), 0);
  Matrix xtr, xte;
  std::vector<int> ytr, yte;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = order[i];
    if (i < n_train) {
      xtr.push_row(corpus.x.row(r));
      ytr.push_back(corpus.labels[r]);
      ++train_class_count[static_cast<std::size_t>(corpus.labels[r])];
    } else {
      xte.push_row(corpus.x.row(r));
      yte.push_back(corpus.labels[r]);
    }
  }
  for (int c = 0; c < corpus.n_classes; ++c)
    if (train_class_count[static_cast<std::size_t>(c)] < 2)
      throw InsufficientData("class " + std::to_string(c) + " has fewer than 2 training examples");

  Mlp::Config cfg;
  cfg.inputs = corpus.dim;
  cfg.hidden = opts.hidden;
  cfg.outputs = corpus.n_classes;
  cfg.softmax_output = true;
  cfg.learning_rate = opts.learning_rate;
  cfg.l2 = opts.l2;
  cfg.epochs = opts.epochs;
  cfg.validation_fraction = opts.validation_fraction;
  cfg.seed = mix_seed(split_seed, 0xead);
  Mlp net(cfg);
  net.fit_classes(xtr, ytr);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < xte.rows; ++i)
    if (net.predict_class(xte.row(i)) == yte[i]) ++correct;

  EmotionHead::Meta meta;
  meta.split_seed = split_seed;
  meta.test_accuracy = xte.rows ? static_cast<double>(correct) / static_cast<double>(xte.rows) : 0.0;
  meta.hidden = opts.hidden;
  meta.n_classes = corpus.n_classes;
  meta.input_dim = corpus.dim;
  return EmotionHead(std::move(net), meta);
}

SpeechEmotionDist classify_window(const EmotionHead& head, const std::vector<double>& embedding) {
  if (head.meta().n_classes != 7)
    throw DimensionMismatch("classify_window expects a 7-way head");
  auto p = head.classify(embedding);
  SpeechEmotionDist d;
  std::copy(p.begin(), p.end(), d.probs.begin());
  return d;
}

std::pair<std::array<double, 7>, bool> segment_audio_features(
    const std::vector<SpeechEmotionDist>& dists) {
  if (dists.empty()) return {kUniformAudioDefault, true};
  Matrix m(dists.size(), 7);
  for (std::size_t i = 0; i < dists.size(); ++i)
    std::copy(dists[i].probs.begin(), dists[i].probs.end(), m[i]);
  auto means = par::column_means_serial(m, {});
  std::array<double, 7> out{};
  std::copy(means.begin(), means.end(), out.begin());
  return {out, false};
}

std::pair<std::array<double, 7>, bool> extract_audio(const Segment& segment,
                                                     const AudioBackend& backend,
                                                     const EmotionHead& head,
                                                     double window_seconds) {
  auto windows = window_audio(segment, window_seconds);
  std::vector<SpeechEmotionDist> dists;
  dists.reserve(windows.size());
  for (const auto& w : windows) {
    std::vector<double> e;
    try {
      e = embed_window(backend, w);
    } catch (const DimensionMismatch&) {
      throw;
    } catch (const std::exception& ex) {
      throw BackendFailure("embed failed at t=" + format_double(w.start) + " in " +
                           segment.id.str() + ": " + ex.what());
    }
    dists.push_back(classify_window(head, e));
  }
  return segment_audio_features(dists);
}

AudioBackend make_scripted_audio_backend(MediaScript script, int embedding_dim) {
  if (embedding_dim < 8) throw DimensionMismatch("scripted audio: embedding_dim >= 8");
  auto shared = std::make_shared<MediaScript>(std::move(script));
  AudioBackend b;
  b.version = "scripted-audio/1";
  b.embedding_dim = embedding_dim;
  b.embed = [shared, embedding_dim](const AudioWindow& w) {
    const SegmentScript* s = shared->find(w.segment);
    if (!s || !s->audio) throw BackendFailure("no script for " + w.segment.str());
    if (s->audio->fail) throw BackendFailure("scripted failure");
    const AudioScript& a = *s->audio;
    auto wkey = static_cast<std::uint64_t>(w.start * 1000.0);

    // Draw the window's expressed emotion from the planted distribution.
    double u = 0.5 * (script_noise(shared->seed, wkey, 0, 10) + 1.0);
    double acc = 0.0;
    int expressed = 6;
    for (int k = 0; k < 7; ++k) {
      acc += a.emotions[static_cast<std::size_t>(k)];
      if (u <= acc) {
        expressed = k;
        break;
      }
    }

    std::vector<double> e(static_cast<std::size_t>(embedding_dim));
    for (int k = 0; k < 7; ++k) {
      double logit = (k == expressed) ? 4.0 : 0.0;
      e[static_cast<std::size_t>(k)] =
          logit + a.jitter * script_noise(shared->seed, wkey, static_cast<std::uint64_t>(k), 11);
    }
    for (int k = 7; k < embedding_dim; ++k)
      e[static_cast<std::size_t>(k)] =
          0.1 * script_noise(shared->seed, wkey, static_cast<std::uint64_t>(k), 12);
    return e;
  };
  return b;
}

LabeledEmbeddings scripted_labeled_embeddings(int per_class, int embedding_dim,
                                              double jitter, std::uint64_t seed) {
  LabeledEmbeddings out;
  out.dim = embedding_dim;
  out.n_classes = 7;
  for (int c = 0; c < 7; ++c) {
    for (int i = 0; i < per_class; ++i) {
      auto key = static_cast<std::uint64_t>(c * per_class + i);
      std::vector<double> e(static_cast<std::size_t>(embedding_dim));
      for (int k = 0; k < 7; ++k) {
        double logit = (k == c) ? 4.0 : 0.0;
        e[static_cast<std::size_t>(k)] =
            logit + jitter * script_noise(seed, key, static_cast<std::uint64_t>(k), 21);
      }
      for (int k = 7; k < embedding_dim; ++k)
        e[static_cast<std::size_t>(k)] =
            0.1 * script_noise(seed, key, static_cast<std::uint64_t>(k), 22);
      out.x.push_row(e);
      out.labels.push_back(c);
    }
  }
  return out;
}

}  // namespace ew
