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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/pipeline.hpp"
#include "ew/synth.hpp"
#include "ew/util.hpp"
#include "ew/visualfeat.hpp"

using namespace ew;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TmpDir {
  fs::path path;
  explicit TmpDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
};

RunConfig small_config(const fs::path& corpus, const fs::path& out) {
  RunConfig cfg;
  cfg.corpus_root = corpus.string();
  cfg.out_dir = out.string();
  cfg.emotion_head = "probe";  // fast, no training
  cfg.shap_budget = 40;
  cfg.threads = 2;
  return cfg;
}

void make_corpus(const fs::path& dir, int lessons, int segs, std::uint64_t seed = 7,
                 double target = 0.8) {
  SynthSpec spec;
  spec.lessons = lessons;
  spec.segments_per_lesson = segs;
  spec.seed = seed;
  spec.target_corr = target;
  write_synth_corpus(dir, generate_synthetic_corpus(spec));
}

}  // namespace

TEST_CASE("run_extract computes once and then serves the cache") {
  TmpDir corpus("ew_pl_corpus1"), out("ew_pl_out1");
  make_corpus(corpus.path, 6, 2);
  auto cfg = small_config(corpus.path, out.path);

  auto first = run_extract(cfg);
  CHECK(first.rows.size() == 12);
  CHECK(first.computed == 12);
  CHECK(first.cached == 0);
  CHECK(first.errors.empty());
  CHECK(fs::exists(out.path / "features.csv"));

  auto second = run_extract(cfg);
  CHECK(second.computed == 0);  // zero recomputation on an unchanged corpus
  CHECK(second.cached == 12);
  for (std::size_t i = 0; i < first.rows.size(); ++i) {
    CHECK(second.rows[i].features == first.rows[i].features);
  }
}

TEST_CASE("feature rows carry sane values and human means") {
  TmpDir corpus("ew_pl_corpus2"), out("ew_pl_out2");
  make_corpus(corpus.path, 5, 2);
  auto cfg = small_config(corpus.path, out.path);
  auto result = run_extract(cfg);
  for (const auto& row : result.rows) {
    CHECK_FALSE(row.features.flags.visual_missing);
    CHECK_FALSE(row.features.flags.audio_missing);
    REQUIRE(row.human_mean.has_value());
    CHECK(*row.human_mean >= 1.0);
    CHECK(*row.human_mean <= 4.0);
    double audio_sum = 0;
    for (double v : row.features.audio) audio_sum += v;
    CHECK(audio_sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(row.features.visual[0] >= -1.0);
    CHECK(row.features.visual[0] <= 1.0);
  }
}

TEST_CASE("a corrupt media script flags that segment and spares the rest") {
  TmpDir corpus("ew_pl_corpus3"), out("ew_pl_out3");
  make_corpus(corpus.path, 4, 2);
  // Sabotage one segment's visual script.
  fs::path script_path = corpus.path / "SL001" / "media_script.json";
  json script = json::parse(read_text_file(script_path));
  script["segments"]["0"]["visual"]["fail"] = true;
  write_text_file(script_path, script.dump(2) + "\n");

  auto cfg = small_config(corpus.path, out.path);
  auto result = run_extract(cfg);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].find("SL001#0") != std::string::npos);
  int flagged = 0;
  for (const auto& row : result.rows)
    if (row.features.flags.visual_missing) {
      ++flagged;
      CHECK(row.segment.str() == "SL001#0");
      CHECK(row.features.visual == kNeutralVisualDefault);
    }
  CHECK(flagged == 1);
}

TEST_CASE("toggling a modality flags it and changes the cache key") {
  TmpDir corpus("ew_pl_corpus4"), out("ew_pl_out4");
  make_corpus(corpus.path, 4, 1);
  auto cfg = small_config(corpus.path, out.path);
  cfg.use_visual = false;
  auto result = run_extract(cfg);
  for (const auto& row : result.rows) {
    CHECK(row.features.flags.visual_missing);
    CHECK(row.features.visual == kNeutralVisualDefault);
    CHECK_FALSE(row.features.flags.audio_missing);
  }
  // Re-enabling visual must not hit the visual-less cache entries.
  cfg.use_visual = true;
  auto full = run_extract(cfg);
  CHECK(full.computed == 4);
  for (const auto& row : full.rows) CHECK_FALSE(row.features.flags.visual_missing);
}

TEST_CASE("run_evaluate produces the full report bundle") {
  TmpDir corpus("ew_pl_corpus5"), out("ew_pl_out5");
  make_corpus(corpus.path, 12, 3);  // folds of ~7: classifier folds stay class-diverse
  auto cfg = small_config(corpus.path, out.path);
  cfg.families = {"random_forest"};  // keep it quick
  auto result = run_evaluate(cfg);

  for (const char* f : {"report.json", "table1.csv", "estimates.csv", "features.csv",
                        "attributions.csv", "summary.json", "llm_annotations.json"})
    CHECK(fs::exists(out.path / f));

  const auto& sources = result.report.at("sources");
  for (const char* s : {"human_irr", "classification/random_forest",
                        "regression/random_forest", "llm_zero_shot", "ensemble/unweighted",
                        "ensemble/weighted"}) {
    REQUIRE(sources.contains(s));
    CHECK(sources.at(s).value("ok", false));
  }
  CHECK(result.report.at("config_hash").get<std::string>() == cfg.hash());

  auto table = read_csv(out.path / "table1.csv");
  CHECK(table.rows.size() >= 5);
  CHECK(table.header == std::vector<std::string>{"approach", "model", "pearson_r",
                                                 "standard_error"});
}

TEST_CASE("two evaluate runs are byte-identical") {
  TmpDir corpus("ew_pl_corpus6"), outa("ew_pl_out6a"), outb("ew_pl_out6b");
  make_corpus(corpus.path, 8, 2);
  auto cfg_a = small_config(corpus.path, outa.path);
  auto cfg_b = small_config(corpus.path, outb.path);
  cfg_a.families = {"two_layer_feedforward"};
  cfg_b.families = {"two_layer_feedforward"};
  // Same out-path-independent content: the config hash differs (out_dir),
  // so compare the payload sections rather than raw bytes of the config.
  auto ra = run_evaluate(cfg_a);
  auto rb = run_evaluate(cfg_b);
  CHECK(ra.report.at("sources") == rb.report.at("sources"));
  CHECK(ra.report.at("models") == rb.report.at("models"));
  CHECK(ra.report.at("explain") == rb.report.at("explain"));

  // Full byte-identity with identical configs (fresh caches, same out dir
  // recreated in place).
  fs::remove_all(outa.path);
  auto r1 = run_evaluate(cfg_a);
  std::string bytes1 = read_text_file(r1.report_path);
  fs::remove_all(outa.path);
  auto r2 = run_evaluate(cfg_a);
  std::string bytes2 = read_text_file(r2.report_path);
  CHECK(bytes1 == bytes2);
}

TEST_CASE("reports are identical for any thread count") {
  // Parallelism is confined to partition-independent work (per-segment
  // extraction, per-tree forests, per-draw attribution, per-column means),
  // so the whole report must not depend on the worker count.
  TmpDir corpus("ew_pl_corpus11"), out1("ew_pl_out11a"), out2("ew_pl_out11b");
  make_corpus(corpus.path, 8, 2);
  auto cfg1 = small_config(corpus.path, out1.path);
  cfg1.families = {"random_forest"};
  cfg1.threads = 1;
  auto cfg2 = cfg1;
  cfg2.out_dir = out2.path.string();
  cfg2.threads = 2;
  auto r1 = run_evaluate(cfg1);
  auto r2 = run_evaluate(cfg2);
  CHECK(r1.report.at("sources") == r2.report.at("sources"));
  CHECK(r1.report.at("models") == r2.report.at("models"));
  CHECK(r1.report.at("explain") == r2.report.at("explain"));
  CHECK(read_text_file(out1.path / "features.csv") == read_text_file(out2.path / "features.csv"));
  CHECK(read_text_file(out1.path / "attributions.csv") ==
        read_text_file(out2.path / "attributions.csv"));
}

TEST_CASE("run_irr writes a report and matches the identical-rater case") {
  TmpDir corpus("ew_pl_corpus7"), out("ew_pl_out7");
  // Hand-build a corpus where both raters always agree.
  fs::create_directories(corpus.path / "L001");
  write_text_file(corpus.path / "manifest.json",
                  R"({"lessons": [{"id": "L001", "duration": 3840.0}]})");
  std::string transcript;
  for (int i = 0; i < 4; ++i)
    transcript += "[" + format_hms(i * 960.0) + "] L: aufgabe\n";
  write_text_file(corpus.path / "L001" / "transcript.txt", transcript);
  write_text_file(corpus.path / "L001" / "ratings.csv",
                  "segment_index,rater_id,score\n"
                  "0,A,2\n0,B,2\n1,A,3\n1,B,3\n2,A,1\n2,B,1\n3,A,4\n3,B,4\n");
  auto cfg = small_config(corpus.path, out.path);
  auto rep = run_irr(cfg);
  CHECK(rep.mean_r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fs::exists(out.path / "irr.json"));
}

TEST_CASE("run_irr on a corpus with a missing ratings file is a layout error") {
  TmpDir corpus("ew_pl_corpus12"), out("ew_pl_out12");
  fs::create_directories(corpus.path / "L001");
  write_text_file(corpus.path / "manifest.json",
                  R"({"lessons": [{"id": "L001", "duration": 960.0}]})");
  write_text_file(corpus.path / "L001" / "transcript.txt", "[00:00:01] L: hallo\n");
  auto cfg = small_config(corpus.path, out.path);
  CHECK_THROWS_AS(run_irr(cfg), CorpusLayoutError);
}

TEST_CASE("run_annotate writes scores for every segment") {
  TmpDir corpus("ew_pl_corpus8"), out("ew_pl_out8");
  make_corpus(corpus.path, 3, 2);
  auto cfg = small_config(corpus.path, out.path);
  run_annotate(cfg);
  auto table = read_csv(out.path / "estimates.csv");
  CHECK(table.rows.size() == 6);
  // Estimates round-trip through the CSV exactly.
  int c_val = table.col("value"), c_rounded = table.col("rounded"), c_src = table.col("source");
  for (const auto& row : table.rows) {
    SegmentId::parse(row[0]);  // parseable ids
    CHECK(source_from_string(row[static_cast<std::size_t>(c_src)]) == Source::llm_zero_shot);
    double v = std::stod(row[static_cast<std::size_t>(c_val)]);
    CHECK(v >= 1.0);
    CHECK(v <= 4.0);
    CHECK(std::stoi(row[static_cast<std::size_t>(c_rounded)]) == static_cast<int>(v));
  }
  json ann = json::parse(read_text_file(out.path / "llm_annotations.json"));
  CHECK(ann.size() == 6);
  for (const auto& a : ann) CHECK(a.contains("reasoning"));
}

TEST_CASE("a text-only corpus (no media at all) still evaluates end to end") {
  TmpDir corpus("ew_pl_corpus10"), out("ew_pl_out10");
  make_corpus(corpus.path, 12, 3);
  // Strip every media artifact: scripts and stub files.
  for (const auto& entry : fs::recursive_directory_iterator(corpus.path)) {
    auto name = entry.path().filename().string();
    if (name == "media_script.json" || name == "video.stub" || name == "audio.stub")
      fs::remove(entry.path());
  }
  auto cfg = small_config(corpus.path, out.path);
  cfg.families = {"random_forest"};

  auto extraction = run_extract(cfg);
  for (const auto& row : extraction.rows) {
    CHECK(row.features.flags.visual_missing);
    CHECK(row.features.flags.audio_missing);
    CHECK(row.features.visual == kNeutralVisualDefault);
  }
  auto result = run_evaluate(cfg);
  const auto& reg = result.report.at("sources").at("regression/random_forest");
  REQUIRE(reg.value("ok", false));
  CHECK(reg.at("mean_r").get<double>() > 0.3);  // text features alone carry signal
}

TEST_CASE("run_train persists loadable per-fold models") {
  TmpDir corpus("ew_pl_corpus9"), out("ew_pl_out9");
  make_corpus(corpus.path, 10, 2);
  auto cfg = small_config(corpus.path, out.path);
  cfg.families = {"support_vector"};
  run_train(cfg);
  int found = 0;
  for (int f = 0; f < 5; ++f) {
    for (const char* task : {"classification", "regression"}) {
      fs::path p = out.path / "models" /
                   (std::to_string(f) + "_" + task + "_support_vector.json");
      REQUIRE(fs::exists(p));
      auto model = TrainedModel::from_json(json::parse(read_text_file(p)));
      CHECK(model.fold == f);
      auto e = predict_score(model, std::vector<double>(18, 0.1), {"t", 0});
      CHECK(e.value >= 1.0);
      CHECK(e.value <= 4.0);
      ++found;
    }
  }
  CHECK(found == 10);
}

TEST_CASE("config file forms override flags") {
  RunConfig cfg;
  cfg.folds = 5;
  cfg.llm_model = "flag-model";
  json file = {{"folds", 3}, {"llm_model", "file-model"}};
  cfg.apply(file);
  CHECK(cfg.folds == 3);
  CHECK(cfg.llm_model == "file-model");
  CHECK(cfg.use_visual == true);  // untouched fields keep their values

  auto restored = RunConfig::from_json(cfg.to_json());
  CHECK(restored.to_json() == cfg.to_json());
  CHECK(restored.hash() == cfg.hash());
}
