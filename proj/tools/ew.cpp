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

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ew/pipeline.hpp"
#include "ew/synth.hpp"
#include "ew/util.hpp"

using nlohmann::json;

namespace {

struct CommonArgs {
  ew::RunConfig config;
  std::string config_file;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  auto& c = args.config;
  cmd->add_option("--corpus", c.corpus_root, "Corpus root directory");
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--config", args.config_file,
                  "JSON config file; its fields override the flags");
  cmd->add_flag("--no-visual", [&c](std::int64_t) { c.use_visual = false; },
                "Disable the visual modality");
  cmd->add_flag("--no-audio", [&c](std::int64_t) { c.use_audio = false; },
                "Disable the audio modality");
  cmd->add_flag("--no-text", [&c](std::int64_t) { c.use_text = false; },
                "Disable the text modality");
  cmd->add_option("--visual-backend", c.visual_backend, "Visual backend (scripted)");
  cmd->add_option("--audio-backend", c.audio_backend, "Audio backend (scripted)");
  cmd->add_option("--emotion-head", c.emotion_head, "auto | probe | path to head file");
  cmd->add_option("--lexicon", c.lexicon, "Polarity lexicon CSV (token,polarity)");
  cmd->add_option("--frame-rate", c.frame_rate, "Frame sampling rate (FPS)");
  cmd->add_option("--confidence-threshold", c.confidence_threshold,
                  "Face detection confidence threshold");
  cmd->add_option("--window-seconds", c.window_seconds, "Audio window length");
  cmd->add_option("--folds", c.folds, "Cross-validation fold count");
  cmd->add_option("--fold-seed", c.fold_seed, "Fold assignment seed");
  cmd->add_option("--model-seed", c.model_seed, "Model training seed");
  cmd->add_option("--llm-client", c.llm_client, "fake | http");
  cmd->add_option("--llm-model", c.llm_model, "Chat model id");
  cmd->add_option("--llm-cache", c.llm_cache_dir, "Annotation cache directory");
  cmd->add_option("--rubric", c.rubric_dir,
                  "Directory with definition.txt, examples.txt, rubric.txt");
  cmd->add_option("--ensemble-base", c.ensemble_base, "Regressor family the ensemble uses");
  cmd->add_option("--shap-budget", c.shap_budget, "Attribution permutation draws per row");
  cmd->add_option("--shap-seed", c.shap_seed, "Attribution seed");
  cmd->add_option("--feature-cache", c.feature_cache_dir, "Feature cache directory");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = all, 1 = serial)");
}

ew::RunConfig finalize(CommonArgs& args) {
  if (!args.config_file.empty())
    args.config.apply(json::parse(ew::read_text_file(args.config_file)));
  return args.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal encouragement-and-warmth scoring pipeline"};
  app.require_subcommand(1);

  CommonArgs extract_args, train_args, annotate_args, evaluate_args, irr_args, explain_args;

  auto* cmd_extract = app.add_subcommand("extract", "Extract and cache per-segment features");
  add_common_flags(cmd_extract, extract_args);
  auto* cmd_train = app.add_subcommand("train", "Train per-fold models and persist them");
  add_common_flags(cmd_train, train_args);
  auto* cmd_annotate = app.add_subcommand("annotate", "LLM zero-shot annotation only");
  add_common_flags(cmd_annotate, annotate_args);
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Full evaluation with reports");
  add_common_flags(cmd_evaluate, evaluate_args);
  auto* cmd_irr = app.add_subcommand("irr", "Leave-one-rater-out reliability");
  add_common_flags(cmd_irr, irr_args);
  auto* cmd_explain = app.add_subcommand("explain", "Attribution outputs (runs the evaluation pipeline)");
  add_common_flags(cmd_explain, explain_args);

  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  ew::SynthSpec synth_spec;
  std::string synth_out = "synth_corpus";
  cmd_synth->add_option("--out", synth_out, "Target directory")->required();
  cmd_synth->add_option("--lessons", synth_spec.lessons, "Lesson count");
  cmd_synth->add_option("--segments-per-lesson", synth_spec.segments_per_lesson,
                        "Segments per lesson");
  cmd_synth->add_option("--target-corr", synth_spec.target_corr,
                        "Planted feature-label correlation");
  cmd_synth->add_option("--raters", synth_spec.raters, "Rater pool size");
  cmd_synth->add_option("--utterances-per-minute", synth_spec.utterances_per_minute,
                        "Transcript density");
  cmd_synth->add_option("--media-jitter", synth_spec.media_jitter, "Backend noise half-width");
  cmd_synth->add_option("--seed", synth_spec.seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_synth->parsed()) {
      auto result = ew::generate_synthetic_corpus(synth_spec);
      ew::write_synth_corpus(synth_out, result);
      std::size_t total = 0;
      for (const auto& lesson : result.corpus.lessons)
        total += ew::segment_lesson(lesson).size();
      std::printf("wrote %d lessons / %zu segments to %s\n", synth_spec.lessons, total,
                  synth_out.c_str());
      return 0;
    }
    if (cmd_extract->parsed()) {
      auto cfg = finalize(extract_args);
      auto result = ew::run_extract(cfg);
      std::printf("extracted %zu segments (%d computed, %d cached) -> %s/features.csv\n",
                  result.rows.size(), result.computed, result.cached, cfg.out_dir.c_str());
      for (const auto& e : result.errors) std::fprintf(stderr, "segment error: %s\n", e.c_str());
      return 0;
    }
    if (cmd_train->parsed()) {
      auto cfg = finalize(train_args);
      ew::run_train(cfg);
      std::printf("models written to %s/models\n", cfg.out_dir.c_str());
      return 0;
    }
    if (cmd_annotate->parsed()) {
      auto cfg = finalize(annotate_args);
      ew::run_annotate(cfg);
      std::printf("annotations written to %s/llm_annotations.json\n", cfg.out_dir.c_str());
      return 0;
    }
    if (cmd_evaluate->parsed() || cmd_explain->parsed()) {
      auto cfg = finalize(cmd_evaluate->parsed() ? evaluate_args : explain_args);
      auto result = ew::run_evaluate(cfg);
      std::printf("report written to %s\n", result.report_path.string().c_str());
      for (const auto& [name, body] : result.report.at("sources").items()) {
        if (body.value("ok", false))
          std::printf("  %-36s r = %+0.3f (%0.3f)\n", name.c_str(),
                      body["mean_r"].get<double>(), body["standard_error"].get<double>());
        else
          std::printf("  %-36s failed: %s\n", name.c_str(),
                      body.value("error", "unknown").c_str());
      }
      return 0;
    }
    if (cmd_irr->parsed()) {
      auto cfg = finalize(irr_args);
      auto rep = ew::run_irr(cfg);
      std::printf("IRR mean r = %0.3f (SE %0.3f) over %zu raters -> %s/irr.json\n", rep.mean_r,
                  rep.standard_error, rep.per_unit_r.size(), cfg.out_dir.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
