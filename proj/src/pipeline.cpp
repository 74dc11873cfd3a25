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

#include "ew/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "ew/audiofeat.hpp"
#include "ew/errors.hpp"
#include "ew/mediascript.hpp"
#include "ew/parallel.hpp"
#include "ew/sha256.hpp"
#include "ew/textfeat.hpp"
#include "ew/util.hpp"
#include "ew/visualfeat.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ew {

// ----- RunConfig -----

json RunConfig::to_json() const {
  return json{{"corpus_root", corpus_root},
              {"out_dir", out_dir},
              {"use_visual", use_visual},
              {"use_audio", use_audio},
              {"use_text", use_text},
              {"visual_backend", visual_backend},
              {"audio_backend", audio_backend},
              {"audio_embedding_dim", audio_embedding_dim},
              {"emotion_head", emotion_head},
              {"lexicon", lexicon},
              {"frame_rate", frame_rate},
              {"confidence_threshold", confidence_threshold},
              {"window_seconds", window_seconds},
              {"folds", folds},
              {"fold_seed", fold_seed},
              {"model_seed", model_seed},
              {"run_classification", run_classification},
              {"run_regression", run_regression},
              {"families", families},
              {"llm_client", llm_client},
              {"llm_model", llm_model},
              {"llm_cache_dir", llm_cache_dir},
              {"rubric_dir", rubric_dir},
              {"llm_max_tokens", llm_max_tokens},
              {"llm_max_retries", llm_max_retries},
              {"ensemble_base", ensemble_base},
              {"ensemble_eps", ensemble_eps},
              {"shap_budget", shap_budget},
              {"shap_seed", shap_seed},
              {"background_cap", background_cap},
              {"feature_cache_dir", feature_cache_dir},
              {"threads", threads}};
}

void RunConfig::apply(const json& j) {
  auto set_str = [&](const char* k, std::string& v) { if (j.contains(k)) v = j[k].get<std::string>(); };
  auto set_bool = [&](const char* k, bool& v) { if (j.contains(k)) v = j[k].get<bool>(); };
  auto set_int = [&](const char* k, int& v) { if (j.contains(k)) v = j[k].get<int>(); };
  auto set_u64 = [&](const char* k, std::uint64_t& v) { if (j.contains(k)) v = j[k].get<std::uint64_t>(); };
  auto set_dbl = [&](const char* k, double& v) { if (j.contains(k)) v = j[k].get<double>(); };
  set_str("corpus_root", corpus_root);
  set_str("out_dir", out_dir);
  set_bool("use_visual", use_visual);
  set_bool("use_audio", use_audio);
  set_bool("use_text", use_text);
  set_str("visual_backend", visual_backend);
  set_str("audio_backend", audio_backend);
  set_int("audio_embedding_dim", audio_embedding_dim);
  set_str("emotion_head", emotion_head);
  set_str("lexicon", lexicon);
  set_dbl("frame_rate", frame_rate);
  set_dbl("confidence_threshold", confidence_threshold);
  set_dbl("window_seconds", window_seconds);
  set_int("folds", folds);
  set_u64("fold_seed", fold_seed);
  set_u64("model_seed", model_seed);
  set_bool("run_classification", run_classification);
  set_bool("run_regression", run_regression);
  if (j.contains("families")) families = j["families"].get<std::vector<std::string>>();
  set_str("llm_client", llm_client);
  set_str("llm_model", llm_model);
  set_str("llm_cache_dir", llm_cache_dir);
  set_str("rubric_dir", rubric_dir);
  set_int("llm_max_tokens", llm_max_tokens);
  set_int("llm_max_retries", llm_max_retries);
  set_str("ensemble_base", ensemble_base);
  set_dbl("ensemble_eps", ensemble_eps);
  set_int("shap_budget", shap_budget);
  set_u64("shap_seed", shap_seed);
  set_int("background_cap", background_cap);
  set_str("feature_cache_dir", feature_cache_dir);
  set_int("threads", threads);
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.apply(j);
  return c;
}

std::string RunConfig::hash() const { return sha256_hex16(to_json().dump()); }

fs::path RunConfig::cache_path() const {
  return feature_cache_dir.empty() ? fs::path(out_dir) / "feature_cache"
                                   : fs::path(feature_cache_dir);
}

fs::path RunConfig::llm_cache_path() const {
  return llm_cache_dir.empty() ? fs::path(out_dir) / "llm_cache" : fs::path(llm_cache_dir);
}

// ----- shared assembly -----

namespace {

struct Backends {
  VisualBackend visual;
  AudioBackend audio;
  EmotionHead head;
  Lexicon lexicon;
  RubricPack rubric;
  std::map<std::string, std::string> versions;
};

Backends assemble_backends(const RunConfig& cfg, const Corpus& corpus) {
  Backends b;
  MediaScript script = MediaScript::load(corpus);

  if (cfg.visual_backend == "scripted") {
    b.visual = make_scripted_visual_backend(script);
  } else {
    throw Error("unknown visual backend: " + cfg.visual_backend +
                " (this build registers: scripted)");
  }
  if (cfg.audio_backend == "scripted") {
    b.audio = make_scripted_audio_backend(script, cfg.audio_embedding_dim);
  } else {
    throw Error("unknown audio backend: " + cfg.audio_backend +
                " (this build registers: scripted)");
  }

  if (cfg.emotion_head == "probe") {
    b.head = EmotionHead::linear_probe(cfg.audio_embedding_dim);
  } else if (cfg.emotion_head == "auto") {
    auto labeled = scripted_labeled_embeddings(40, cfg.audio_embedding_dim, 0.3,
                                               mix_seed(cfg.model_seed, 0xa0d1));
    b.head = train_emotion_head(labeled, mix_seed(cfg.model_seed, 0xa0d2));
  } else {
    b.head = EmotionHead::load(cfg.emotion_head);
  }

  if (!cfg.lexicon.empty()) {
    b.lexicon = Lexicon::load(cfg.lexicon);
  } else if (fs::exists(fs::path(cfg.corpus_root) / "lexicon.csv")) {
    b.lexicon = Lexicon::load(fs::path(cfg.corpus_root) / "lexicon.csv");
  } else {
    b.lexicon = Lexicon::builtin_test();
  }

  b.rubric = cfg.rubric_dir.empty() ? RubricPack::builtin() : RubricPack::load_dir(cfg.rubric_dir);

  b.versions["visual"] = b.visual.version;
  b.versions["audio"] = b.audio.version;
  b.versions["emotion_head"] = "head/" + std::to_string(b.head.meta().hidden) + "/" +
                               std::to_string(b.head.meta().split_seed);
  b.versions["lexicon"] = b.lexicon.version();
  b.versions["rubric"] = b.rubric.version();
  return b;
}

std::string segment_content_hash(const RunConfig& cfg, const Segment& seg,
                                 const MediaScript& script, const Backends& b) {
  std::string content = seg.id.str() + "\x1f" + format_double(seg.start) + "\x1f" +
                        format_double(seg.end) + "\x1f";
  for (const auto& u : seg.utterances)
    content += format_double(u.start_time) + "|" + u.speaker + "|" + u.text + "\n";
  if (const SegmentScript* ss = script.find(seg.id)) {
    MediaScript one;
    one.seed = script.seed;
    one.segments[seg.id] = *ss;
    content += one.lesson_json(seg.id.lesson);
  }
  content += "\x1f" + b.versions.at("visual") + "\x1f" + b.versions.at("audio") + "\x1f" +
             b.versions.at("emotion_head") + "\x1f" + b.versions.at("lexicon");
  content += "\x1f" + format_double(cfg.frame_rate) + "/" +
             format_double(cfg.confidence_threshold) + "/" + format_double(cfg.window_seconds);
  content += "\x1f" + std::to_string(cfg.use_visual) + std::to_string(cfg.use_audio) +
             std::to_string(cfg.use_text);
  return sha256_hex16(content);
}

std::string family_display(const std::string& family) {
  if (family == "random_forest") return "RF";
  if (family == "support_vector") return "SVM";
  if (family == "two_layer_feedforward") return "MLP";
  return family;
}

}  // namespace

// ----- extraction -----

ExtractResult run_extract(const RunConfig& config) {
  par::set_threads(config.threads);
  Corpus corpus = load_corpus(config.corpus_root);
  MediaScript script = MediaScript::load(corpus);
  Backends backends = assemble_backends(config, corpus);
  auto segments = all_segments(corpus);

  const fs::path cache_dir = config.cache_path();
  fs::create_directories(cache_dir);
  fs::create_directories(config.out_dir);

  ExtractResult result;
  result.backend_versions = backends.versions;
  result.errors = corpus.load_errors;
  result.rows.resize(segments.size());

  std::vector<char> was_cached(segments.size(), 0);
  std::vector<std::string> seg_errors(segments.size());
  std::vector<std::vector<std::string>> seg_warnings(segments.size());
  PolarityScorer scorer = backends.lexicon.scorer();

  par::parallel_for(segments.size(), [&](std::size_t i) {
    const Segment& seg = segments[i];
    FeatureRow row;
    row.segment = seg.id;
    row.n_ratings = static_cast<int>(seg.ratings.size());
    if (!seg.ratings.empty()) row.human_mean = mean_human_rating(seg).value;

    const std::string key = segment_content_hash(config, seg, script, backends);
    const fs::path cache_file = cache_dir / (key + ".json");
    if (fs::exists(cache_file)) {
      json j = json::parse(read_text_file(cache_file));
      row.features.visual = j.at("visual").get<std::array<double, 7>>();
      row.features.audio = j.at("audio").get<std::array<double, 7>>();
      row.features.text = j.at("text").get<std::array<double, 4>>();
      row.features.flags.visual_missing = j.at("visual_missing").get<bool>();
      row.features.flags.audio_missing = j.at("audio_missing").get<bool>();
      was_cached[i] = 1;
      result.rows[i] = std::move(row);
      return;
    }

    FeatureVector fv;
    std::string err;
    if (config.use_visual) {
      try {
        VisualOptions vo;
        vo.frame_rate = config.frame_rate;
        vo.confidence_threshold = config.confidence_threshold;
        auto [vis, missing] = extract_visual(seg, backends.visual, vo, &seg_warnings[i]);
        fv.visual = vis;
        fv.flags.visual_missing = missing;
      } catch (const Error& e) {
        fv.visual = kNeutralVisualDefault;
        fv.flags.visual_missing = true;
        err += std::string("visual: ") + e.what() + "; ";
      }
    } else {
      fv.visual = kNeutralVisualDefault;
      fv.flags.visual_missing = true;
    }
    if (config.use_audio) {
      try {
        auto [aud, missing] =
            extract_audio(seg, backends.audio, backends.head, config.window_seconds);
        fv.audio = aud;
        fv.flags.audio_missing = missing;
      } catch (const Error& e) {
        fv.audio = kUniformAudioDefault;
        fv.flags.audio_missing = true;
        err += std::string("audio: ") + e.what() + "; ";
      }
    } else {
      fv.audio = kUniformAudioDefault;
      fv.flags.audio_missing = true;
    }
    if (config.use_text) {
      fv.text = segment_text_features(seg, scorer);
    } else {
      fv.text = {0.0, 0.0, 0.0, 0.0};
    }
    row.features = fv;
    if (!err.empty()) seg_errors[i] = seg.id.str() + ": " + err;

    json j = {{"segment", seg.id.str()},
              {"visual", fv.visual},
              {"audio", fv.audio},
              {"text", fv.text},
              {"visual_missing", fv.flags.visual_missing},
              {"audio_missing", fv.flags.audio_missing}};
    write_text_file(cache_file, j.dump() + "\n");
    result.rows[i] = std::move(row);
  });

  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (was_cached[i])
      ++result.cached;
    else
      ++result.computed;
    if (!seg_errors[i].empty()) result.errors.push_back(seg_errors[i]);
    for (auto& w : seg_warnings[i]) result.warnings.push_back(std::move(w));
  }

  // features.csv
  std::vector<std::string> header{"segment_id"};
  for (const auto& n : feature_names()) header.push_back(n);
  header.insert(header.end(), {"visual_missing", "audio_missing", "human_mean", "n_ratings"});
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : result.rows) {
    std::vector<std::string> line{r.segment.str()};
    for (double v : r.features.fused()) line.push_back(format_double(v));
    line.push_back(r.features.flags.visual_missing ? "1" : "0");
    line.push_back(r.features.flags.audio_missing ? "1" : "0");
    line.push_back(r.human_mean ? format_double(*r.human_mean) : "");
    line.push_back(std::to_string(r.n_ratings));
    rows.push_back(std::move(line));
  }
  write_csv(fs::path(config.out_dir) / "features.csv", header, rows);
  return result;
}

// ----- evaluation -----

namespace {

struct EvalData {
  Corpus corpus;
  std::vector<Segment> rated;           // segments with >= 1 rating
  std::vector<FeatureRow> rated_rows;   // aligned with `rated`
  FoldAssignment folds;
  std::vector<double> human;            // aligned means
};

EvalData prepare_eval_data(const RunConfig& config, const ExtractResult& extraction) {
  EvalData d;
  d.corpus = load_corpus(config.corpus_root);
  auto segments = all_segments(d.corpus);
  std::map<std::string, const FeatureRow*> by_id;
  for (const auto& r : extraction.rows) by_id[r.segment.str()] = &r;
  for (const auto& seg : segments) {
    if (seg.ratings.empty()) continue;
    auto it = by_id.find(seg.id.str());
    if (it == by_id.end()) continue;
    d.rated.push_back(seg);
    d.rated_rows.push_back(*it->second);
    d.human.push_back(mean_human_rating(seg).value);
  }
  d.folds = make_folds(d.rated, config.folds, config.fold_seed);
  return d;
}

std::unique_ptr<ChatClient> make_client(const RunConfig& config, const Lexicon& lexicon) {
  if (config.llm_client == "fake") return FakeChatClient::heuristic(lexicon);
  if (config.llm_client == "http") {
    HttpChatClient::Options opts;
    return std::make_unique<HttpChatClient>(opts);
  }
  throw Error("unknown llm client: " + config.llm_client + " (fake | http)");
}

struct SourceOutcome {
  CorrelationReport report;
  bool ok = false;
  std::string error;
  std::vector<ScoreEstimate> estimates;  // all folds concatenated
};

json report_from(const SourceOutcome& s) {
  json j;
  j["ok"] = s.ok;
  if (!s.ok) {
    j["error"] = s.error;
    return j;
  }
  j["per_fold_r"] = s.report.per_unit_r;
  j["n_per_fold"] = s.report.n_per_unit;
  std::vector<double> p_values;
  for (std::size_t i = 0; i < s.report.per_unit_r.size(); ++i)
    p_values.push_back(pearson_p_value(s.report.per_unit_r[i], s.report.n_per_unit[i]));
  j["per_fold_p"] = p_values;
  j["mean_r"] = s.report.mean_r;
  j["standard_error"] = s.report.standard_error;
  if (!s.report.excluded.empty()) j["excluded"] = s.report.excluded;
  return j;
}

}  // namespace

void run_train(const RunConfig& config) {
  par::set_threads(config.threads);
  auto extraction = run_extract(config);
  EvalData data = prepare_eval_data(config, extraction);
  const fs::path mdir = fs::path(config.out_dir) / "models";
  fs::create_directories(mdir);

  std::vector<Task> tasks;
  if (config.run_classification) tasks.push_back(Task::classification);
  if (config.run_regression) tasks.push_back(Task::regression);

  for (int f = 0; f < config.folds; ++f) {
    Matrix xtr;
    std::vector<double> ytr;
    std::vector<std::string> gtr;
    for (std::size_t i = 0; i < data.rated.size(); ++i) {
      if (data.folds.fold_of.at(data.rated[i].id) == f) continue;
      auto fused = data.rated_rows[i].features.fused();
      xtr.push_row(std::vector<double>(fused.begin(), fused.end()));
      ytr.push_back(data.human[i]);
      gtr.push_back(data.rated[i].id.lesson);
    }
    for (Task task : tasks) {
      for (const auto& fam : config.families) {
        ModelSpec spec;
        spec.family = family_from_string(fam);
        spec.task = task;
        spec.seed = mix_seed(config.model_seed,
                             static_cast<std::uint64_t>(f * 100 + (task == Task::regression)));
        TrainedModel model = fit_model(spec, xtr, ytr, gtr);
        model.fold = f;
        write_text_file(mdir / (std::to_string(f) + "_" + to_string(task) + "_" + fam + ".json"),
                        model.to_json().dump() + "\n");
      }
    }
  }
}

EvaluateResult run_evaluate(const RunConfig& config) {
  par::set_threads(config.threads);
  auto extraction = run_extract(config);
  EvalData data = prepare_eval_data(config, extraction);
  Backends backends = assemble_backends(config, data.corpus);
  const auto n = data.rated.size();
  const int k = config.folds;

  json report;
  report["config"] = config.to_json();
  report["config_hash"] = config.hash();
  report["seeds"] = {{"fold", config.fold_seed},
                     {"model", config.model_seed},
                     {"shap", config.shap_seed}};
  report["backend_versions"] = backends.versions;
  json fold_json;
  for (const auto& [sid, f] : data.folds.fold_of) fold_json[sid.str()] = f;
  report["folds"] = {{"k", k}, {"assignment", fold_json}};
  if (!extraction.errors.empty()) report["extraction_errors"] = extraction.errors;

  std::map<std::string, SourceOutcome> sources;
  std::vector<ScoreEstimate> all_estimates;

  // Human means double as the reference and an estimates.csv source.
  for (std::size_t i = 0; i < n; ++i) {
    ScoreEstimate e = mean_human_rating(data.rated[i]);
    all_estimates.push_back(e);
  }

  // --- human IRR
  {
    SourceOutcome irr;
    try {
      irr.report = leave_one_rater_out_irr(data.rated);
      irr.ok = true;
    } catch (const Error& e) {
      irr.error = e.what();
    }
    sources["human_irr"] = std::move(irr);
  }

  // --- LLM annotation over every rated segment
  std::vector<std::optional<int>> llm_scores(n);
  json llm_annotations = json::array();
  {
    auto client = make_client(config, backends.lexicon);
    AnnotationCache cache(config.llm_cache_path());
    AnnotateOptions aopts;
    aopts.model = config.llm_model;
    aopts.max_transport_retries = config.llm_max_retries;
    PromptOptions popts;
    popts.max_tokens = config.llm_max_tokens;
    std::vector<std::string> llm_failures;
    for (std::size_t i = 0; i < n; ++i) {
      try {
        LlmResponse r =
            annotate_segment(*client, &cache, backends.rubric, data.rated[i], aopts, popts);
        llm_scores[i] = r.score;
        if (!r.score) llm_failures.push_back(data.rated[i].id.str() + ": unparseable response");
        llm_annotations.push_back({{"segment", data.rated[i].id.str()},
                                   {"score", r.score ? json(*r.score) : json(nullptr)},
                                   {"reasoning", r.reasoning},
                                   {"model", r.model_id}});
      } catch (const std::exception& e) {
        llm_failures.push_back(data.rated[i].id.str() + ": " + e.what());
      }
    }
    report["llm_failures"] = llm_failures;
  }

  // --- trained models per fold
  std::vector<Task> tasks;
  if (config.run_classification) tasks.push_back(Task::classification);
  if (config.run_regression) tasks.push_back(Task::regression);

  // source name -> per fold estimates/humans
  std::map<std::string, std::vector<std::vector<double>>> est_per_fold, hum_per_fold;
  auto ensure_source = [&](const std::string& name) {
    est_per_fold.try_emplace(name, static_cast<std::size_t>(k));
    hum_per_fold.try_emplace(name, static_cast<std::size_t>(k));
    sources.try_emplace(name);
  };

  json models_json;
  std::map<int, TrainedModel> base_regressors;  // fold -> ensemble base
  std::map<int, double> base_train_r, llm_train_r;
  std::vector<AttributionRow> attributions;

  for (int f = 0; f < k; ++f) {
    Matrix xtr;
    std::vector<double> ytr;
    std::vector<std::string> gtr;
    std::vector<std::size_t> test_idx;
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (data.folds.fold_of.at(data.rated[i].id) == f) {
        test_idx.push_back(i);
      } else {
        auto fused = data.rated_rows[i].features.fused();
        xtr.push_row(std::vector<double>(fused.begin(), fused.end()));
        ytr.push_back(data.human[i]);
        gtr.push_back(data.rated[i].id.lesson);
        train_idx.push_back(i);
      }
    }

    for (Task task : tasks) {
      for (const auto& fam : config.families) {
        const std::string name = to_string(task) + "/" + fam;
        ensure_source(name);
        auto& outcome = sources[name];
        try {
          ModelSpec spec;
          spec.family = family_from_string(fam);
          spec.task = task;
          spec.seed = mix_seed(config.model_seed,
                               static_cast<std::uint64_t>(f * 100 + (task == Task::regression)));
          TrainedModel model = fit_model(spec, xtr, ytr, gtr);
          model.fold = f;
          json mj = {{"chosen", model.chosen},
                     {"inner_score", model.inner_score},
                     {"train_pearson",
                      model.train_pearson ? json(*model.train_pearson) : json(nullptr)},
                     {"train_accuracy", model.train_accuracy}};
          models_json[std::to_string(f)][name] = mj;

          for (std::size_t i : test_idx) {
            auto fused = data.rated_rows[i].features.fused();
            ScoreEstimate e = predict_score(
                model, std::vector<double>(fused.begin(), fused.end()), data.rated[i].id);
            est_per_fold[name][static_cast<std::size_t>(f)].push_back(e.value);
            hum_per_fold[name][static_cast<std::size_t>(f)].push_back(data.human[i]);
            outcome.estimates.push_back(e);
          }
          // The ensemble base is the configured regressor family; when that
          // family is not part of the run, the best regressor by training r
          // stands in.
          if (task == Task::regression && model.train_pearson) {
            bool configured = fam == config.ensemble_base;
            bool fallback = !base_regressors.count(f) ||
                            (base_regressors.at(f).spec.family !=
                                 family_from_string(config.ensemble_base) &&
                             *model.train_pearson > base_train_r[f]);
            if (configured || fallback) {
              base_regressors[f] = model;
              base_train_r[f] = *model.train_pearson;
            }
          }
        } catch (const Error& e) {
          outcome.error = e.what();
        }
      }
    }

    // LLM per-fold series + its training-side r for the weighted ensemble.
    {
      ensure_source("llm_zero_shot");
      auto& outcome = sources["llm_zero_shot"];
      for (std::size_t i : test_idx) {
        if (!llm_scores[i]) continue;
        double v = static_cast<double>(*llm_scores[i]);
        est_per_fold["llm_zero_shot"][static_cast<std::size_t>(f)].push_back(v);
        hum_per_fold["llm_zero_shot"][static_cast<std::size_t>(f)].push_back(data.human[i]);
        ScoreEstimate e;
        e.segment = data.rated[i].id;
        e.value = v;
        e.rounded = *llm_scores[i];
        e.source = Source::llm_zero_shot;
        outcome.estimates.push_back(e);
      }
      std::vector<double> ltr, htr;
      for (std::size_t i : train_idx) {
        if (!llm_scores[i]) continue;
        ltr.push_back(static_cast<double>(*llm_scores[i]));
        htr.push_back(data.human[i]);
      }
      if (ltr.size() >= 3) {
        try {
          llm_train_r[f] = pearson(ltr, htr);
        } catch (const ConstantInput&) {
        }
      }
    }

    // Ensembles on segments where both bases produced an estimate.
    if (base_regressors.count(f)) {
      const TrainedModel& base = base_regressors.at(f);
      for (const char* mode : {"unweighted", "weighted"}) {
        const std::string name = std::string("ensemble/") + mode;
        ensure_source(name);
        auto& outcome = sources[name];
        bool weighted = std::string(mode) == "weighted";
        if (weighted && (!base_train_r.count(f) || !llm_train_r.count(f))) {
          outcome.error = "fold " + std::to_string(f) + ": missing training performance";
          continue;
        }
        EnsembleSpec espec;
        espec.mode = weighted ? EnsembleSpec::Mode::weighted : EnsembleSpec::Mode::unweighted;
        if (weighted)
          espec.weights =
              ensemble_weights({base_train_r.at(f), llm_train_r.at(f)}, config.ensemble_eps);
        for (std::size_t i : test_idx) {
          if (!llm_scores[i]) continue;
          auto fused = data.rated_rows[i].features.fused();
          ScoreEstimate eb = predict_score(
              base, std::vector<double>(fused.begin(), fused.end()), data.rated[i].id);
          ScoreEstimate el;
          el.segment = data.rated[i].id;
          el.value = static_cast<double>(*llm_scores[i]);
          el.source = Source::llm_zero_shot;
          ScoreEstimate combined = combine({eb, el}, espec);
          est_per_fold[name][static_cast<std::size_t>(f)].push_back(combined.value);
          hum_per_fold[name][static_cast<std::size_t>(f)].push_back(data.human[i]);
          outcome.estimates.push_back(combined);
        }
      }
    }

    // Attribution of the base regressor on its test fold.
    if (base_regressors.count(f)) {
      const TrainedModel& base = base_regressors.at(f);
      std::vector<int> strata;
      for (std::size_t i : train_idx) strata.push_back(round_score(data.human[i]));
      Matrix bg = stratified_background(xtr, strata,
                                        static_cast<std::size_t>(config.background_cap),
                                        mix_seed(config.shap_seed, static_cast<std::uint64_t>(f)));
      PredictFn fn = [&base](const std::vector<double>& raw) {
        return base.estimator.predict_value(base.standardizer.transform(raw));
      };
      for (std::size_t i : test_idx) {
        auto fused = data.rated_rows[i].features.fused();
        AttributionRow row =
            attribute(fn, bg, std::vector<double>(fused.begin(), fused.end()),
                      config.shap_budget,
                      mix_seed(config.shap_seed, 1000 + static_cast<std::uint64_t>(i)));
        row.segment = data.rated[i].id;
        row.fold = f;
        attributions.push_back(std::move(row));
      }
    }
  }

  // --- correlation reports per source
  for (auto& [name, per_fold] : est_per_fold) {
    auto& outcome = sources[name];
    if (!outcome.error.empty()) continue;
    try {
      outcome.report = evaluate_source(per_fold, hum_per_fold[name]);
      outcome.ok = true;
    } catch (const Error& e) {
      outcome.error = e.what();
    }
  }

  json sources_json;
  for (const auto& [name, outcome] : sources) sources_json[name] = report_from(outcome);
  report["sources"] = sources_json;
  report["models"] = models_json;

  // --- attribution summary
  if (!attributions.empty()) {
    AttributionSummary summary = summarize(attributions, 10);
    json ranking = json::array();
    for (std::size_t j : summary.ranking)
      ranking.push_back({{"feature", feature_names()[j]},
                         {"importance", summary.importance[j]}});
    report["explain"] = {{"ranking", ranking}};

    json summary_json;
    summary_json["ranking"] = ranking;
    summary_json["top_n"] = summary.top_n;
    json dep;
    for (int t = 0; t < summary.top_n; ++t) {
      json pairs = json::array();
      for (auto [value, phi] : summary.dependence[static_cast<std::size_t>(t)])
        pairs.push_back({value, phi});
      dep[feature_names()[summary.ranking[static_cast<std::size_t>(t)]]] = pairs;
    }
    summary_json["dependence"] = dep;
    write_text_file(fs::path(config.out_dir) / "summary.json", summary_json.dump(2) + "\n");

    std::vector<std::string> header{"segment_id", "fold"};
    for (const auto& fn : feature_names()) header.push_back("phi." + fn);
    header.push_back("base_value");
    header.push_back("prediction");
    header.push_back("efficiency_residual");
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : attributions) {
      std::vector<std::string> line{a.segment.str(), std::to_string(a.fold)};
      for (double v : a.phi) line.push_back(format_double(v));
      line.push_back(format_double(a.base_value));
      line.push_back(format_double(a.prediction));
      line.push_back(format_double(a.efficiency_residual));
      rows.push_back(std::move(line));
    }
    write_csv(fs::path(config.out_dir) / "attributions.csv", header, rows);
  }

  // --- llm annotations with reasoning
  write_text_file(fs::path(config.out_dir) / "llm_annotations.json",
                  llm_annotations.dump(2) + "\n");

  // --- estimates.csv
  {
    std::vector<std::vector<std::string>> rows;
    auto emit = [&rows](const ScoreEstimate& e, const std::string& src) {
      rows.push_back({e.segment.str(), src, format_double(e.value),
                      e.rounded ? std::to_string(*e.rounded) : ""});
    };
    for (const auto& e : all_estimates) emit(e, "human_mean");
    for (const auto& [name, outcome] : sources)
      for (const auto& e : outcome.estimates) emit(e, name);
    write_csv(fs::path(config.out_dir) / "estimates.csv",
              {"segment_id", "source", "value", "rounded"}, rows);
  }

  // --- table1.csv
  {
    std::vector<std::vector<std::string>> rows;
    auto round3 = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", v);
      return std::string(buf);
    };
    auto add = [&](const std::string& approach, const std::string& model,
                   const std::string& source) {
      auto it = sources.find(source);
      if (it == sources.end()) return;
      if (it->second.ok) {
        rows.push_back({approach, model, round3(it->second.report.mean_r),
                        round3(it->second.report.standard_error)});
      } else {
        rows.push_back({approach, model, "", ""});
      }
    };
    add("Inter-Rater Reliability", "Human Raters", "human_irr");
    for (const auto& fam : config.families)
      add("Multimodal Classifier", family_display(fam), "classification/" + fam);
    for (const auto& fam : config.families)
      add("Multimodal Regressor", family_display(fam), "regression/" + fam);
    add("LLM Zero-Shot", config.llm_model, "llm_zero_shot");
    const bool base_configured =
        std::find(config.families.begin(), config.families.end(), config.ensemble_base) !=
        config.families.end();
    const std::string base_disp =
        base_configured ? family_display(config.ensemble_base) : std::string("Best");
    add("Ensemble", base_disp + " Reg.+LLM (Unweighted)", "ensemble/unweighted");
    add("Ensemble", base_disp + " Reg.+LLM (Weighted)", "ensemble/weighted");
    write_csv(fs::path(config.out_dir) / "table1.csv",
              {"approach", "model", "pearson_r", "standard_error"}, rows);
  }

  EvaluateResult out;
  out.report = report;
  out.report_path = fs::path(config.out_dir) / "report.json";
  write_text_file(out.report_path, report.dump(2) + "\n");
  return out;
}

CorrelationReport run_irr(const RunConfig& config) {
  par::set_threads(config.threads);
  Corpus corpus = load_corpus(config.corpus_root);
  auto segments = all_segments(corpus);
  std::vector<Segment> rated;
  for (auto& s : segments)
    if (!s.ratings.empty()) rated.push_back(s);
  if (rated.empty() && !corpus.load_errors.empty())
    throw CorpusLayoutError("no ratable lessons: " + corpus.load_errors.front());
  CorrelationReport rep = leave_one_rater_out_irr(rated);
  fs::create_directories(config.out_dir);
  json j = {{"per_rater_r", rep.per_unit_r},
            {"n_per_rater", rep.n_per_unit},
            {"mean_r", rep.mean_r},
            {"standard_error", rep.standard_error},
            {"excluded", rep.excluded},
            {"config_hash", config.hash()}};
  write_text_file(fs::path(config.out_dir) / "irr.json", j.dump(2) + "\n");
  return rep;
}

void run_annotate(const RunConfig& config) {
  par::set_threads(config.threads);
  Corpus corpus = load_corpus(config.corpus_root);
  Backends backends = assemble_backends(config, corpus);
  auto segments = all_segments(corpus);
  auto client = make_client(config, backends.lexicon);
  AnnotationCache cache(config.llm_cache_path());
  AnnotateOptions aopts;
  aopts.model = config.llm_model;
  aopts.max_transport_retries = config.llm_max_retries;
  PromptOptions popts;
  popts.max_tokens = config.llm_max_tokens;

  fs::create_directories(config.out_dir);
  json annotations = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& seg : segments) {
    try {
      LlmResponse r = annotate_segment(*client, &cache, backends.rubric, seg, aopts, popts);
      annotations.push_back({{"segment", seg.id.str()},
                             {"score", r.score ? json(*r.score) : json(nullptr)},
                             {"reasoning", r.reasoning},
                             {"model", r.model_id}});
      if (r.score)
        rows.push_back({seg.id.str(), "llm_zero_shot", format_double(*r.score),
                        std::to_string(*r.score)});
    } catch (const std::exception& e) {
      annotations.push_back({{"segment", seg.id.str()}, {"error", e.what()}});
    }
  }
  write_text_file(fs::path(config.out_dir) / "llm_annotations.json", annotations.dump(2) + "\n");
  write_csv(fs::path(config.out_dir) / "estimates.csv",
            {"segment_id", "source", "value", "rounded"}, rows);
}

void run_explain(const RunConfig& config) {
  // The evaluate pass already computes attribution outputs; a standalone
  // explain run is evaluate with the LLM and extra sources untouched but
  // reuses the same deterministic path.
  run_evaluate(config);
}

}  // namespace ew
