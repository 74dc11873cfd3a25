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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ew/evalharness.hpp"
#include "ew/explain.hpp"
#include "ew/ingest.hpp"
#include "ew/llm.hpp"
#include "ew/predict.hpp"
#include "ew/types.hpp"

namespace ew {

/// Everything a run needs; flags mirror these fields, and a config file
/// overrides flags. Seeds are always set (defaults count), so reruns are
/// reproducible by construction.
struct RunConfig {
  std::string corpus_root;
  std::string out_dir = "out";

  // modalities and backends
  bool use_visual = true;
  bool use_audio = true;
  bool use_text = true;
  std::string visual_backend = "scripted";
  std::string audio_backend = "scripted";
  int audio_embedding_dim = 24;
  std::string emotion_head = "auto";  // auto | probe | <path>
  std::string lexicon;                // path; empty = <root>/lexicon.csv or builtin
  double frame_rate = 2.0;
  double confidence_threshold = 0.8;
  double window_seconds = 5.0;

  // folds and models
  int folds = 5;
  std::uint64_t fold_seed = 17;
  std::uint64_t model_seed = 33;
  bool run_classification = true;
  bool run_regression = true;
  std::vector<std::string> families = {"random_forest", "support_vector",
                                       "two_layer_feedforward"};

  // LLM annotation
  std::string llm_client = "fake";  // fake | http
  std::string llm_model = "fake-annotator";
  std::string llm_cache_dir;  // empty = <out_dir>/llm_cache
  std::string rubric_dir;     // empty = builtin pack
  int llm_max_tokens = 15000;
  int llm_max_retries = 3;

  // ensemble
  std::string ensemble_base = "two_layer_feedforward";
  double ensemble_eps = 0.01;

  // explanation
  int shap_budget = 200;
  std::uint64_t shap_seed = 91;
  int background_cap = 100;

  std::string feature_cache_dir;  // empty = <out_dir>/feature_cache
  int threads = 0;                // 0 = all hardware threads

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// Fields present in `j` replace the current values.
  void apply(const nlohmann::json& j);
  std::string hash() const;

  std::filesystem::path cache_path() const;
  std::filesystem::path llm_cache_path() const;
};

struct FeatureRow {
  SegmentId segment;
  FeatureVector features;
  std::optional<double> human_mean;
  int n_ratings = 0;
};

struct ExtractResult {
  std::vector<FeatureRow> rows;  // corpus order
  int computed = 0;
  int cached = 0;
  std::vector<std::string> errors;    // per-segment, non-fatal
  std::vector<std::string> warnings;  // sanitization notes
  std::map<std::string, std::string> backend_versions;
};

/// Extract (or re-load from the content-hash cache) the fused per-segment
/// features; writes features.csv under out_dir and keeps the cache dir
/// incremental.
ExtractResult run_extract(const RunConfig& config);

struct EvaluateResult {
  nlohmann::json report;  // full report.json content
  std::filesystem::path report_path;
};

/// Full evaluation: folds, all configured trained models, LLM annotation
/// (cache-aware), ensembles, IRR, attribution. Emits report.json, table1.csv,
/// estimates.csv, attributions.csv, summary.json under out_dir. A failing
/// source is recorded and skipped; the run continues.
EvaluateResult run_evaluate(const RunConfig& config);

/// Train all configured models per fold and persist them under
/// out_dir/models/.
void run_train(const RunConfig& config);

/// Leave-one-rater-out reliability only; writes irr.json.
CorrelationReport run_irr(const RunConfig& config);

/// LLM annotation only; writes estimates.csv (llm source) and
/// llm_annotations.json with reasoning texts.
void run_annotate(const RunConfig& config);

/// Attribution only (trains the base regressor per fold); writes
/// attributions.csv and summary.json.
void run_explain(const RunConfig& config);

}  // namespace ew
