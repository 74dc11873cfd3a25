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

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ew/textfeat.hpp"
#include "ew/types.hpp"

namespace ew {

/// Rubric material assembled into the zero-shot prompt: the component
/// definition, behavioral examples, and the 1-4 coding rubric. Wording is
/// configuration, not code — edit the text files, not this struct.
struct RubricPack {
  std::string definition;
  std::string examples;
  std::string rubric;

  /// Files definition.txt, examples.txt, rubric.txt under one directory.
  static RubricPack load_dir(const std::filesystem::path& dir);
  static RubricPack builtin();

  void validate() const;  // all parts non-empty
  std::string version() const;  // content hash
};

struct ChatRequest {
  std::string prompt;
  std::string model;
  double temperature = 0.0;
};

/// Client contract: send(prompt, model id, temperature) -> response text.
/// Transport problems throw ServiceUnavailable; bad credentials AuthError.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string send(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Deterministic offline stand-in. Three modes:
///  - scripted: fixed per-call response queue (unit tests);
///  - failing: throws for the first `fail_first` calls, then succeeds;
///  - heuristic: derives SCORE from the positive-word rate of the prompt's
///    transcript section, so offline evaluation stays correlated with the
///    planted signal.
class FakeChatClient : public ChatClient {
 public:
  static std::unique_ptr<FakeChatClient> scripted(std::vector<std::string> responses);
  static std::unique_ptr<FakeChatClient> heuristic(Lexicon lexicon);

  std::string send(const ChatRequest& request) override;
  std::string id() const override { return "fake-annotator"; }

  int calls() const { return calls_; }
  void fail_next(int n) { fail_next_ = n; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  std::optional<Lexicon> lexicon_;
  int calls_ = 0;
  int fail_next_ = 0;
};

/// OpenAI-style chat-completions endpoint over HTTP. The key is read from
/// `api_key_env` (default OPENAI_API_KEY); requests pin temperature 0.
class HttpChatClient : public ChatClient {
 public:
  struct Options {
    std::string host = "https://api.openai.com";
    std::string path = "/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 120;
  };
  explicit HttpChatClient(Options opts);

  std::string send(const ChatRequest& request) override;
  std::string id() const override { return "http:" + opts_.host; }

 private:
  Options opts_;
};

struct LlmResponse {
  std::string raw;
  std::optional<int> score;  // present iff parsing succeeded
  std::string reasoning;
  std::string model_id;
  int transport_retries = 0;
  bool reprompted = false;
};

struct PromptOptions {
  int max_tokens = 15000;  // context budget; tokens estimated as chars/4
};

/// Deterministic prompt: rubric parts, the transcript as `SPEAKER: text`
/// lines, then the SCORE/REASONING output-format instruction. Throws
/// PromptTooLong when the estimate exceeds the budget.
std::string build_prompt(const RubricPack& rubric, const Segment& segment,
                         const PromptOptions& opts = {});

/// Stricter format reminder appended on a corrective re-prompt.
std::string strict_format_reminder();

int estimate_tokens(const std::string& text);

/// First `SCORE:`-style integer in 1..4 (tolerates prose and light markup);
/// reasoning is the remainder after REASONING: or the full text if absent.
std::pair<std::optional<int>, std::string> parse_response(const std::string& raw);

struct AnnotateOptions {
  std::string model = "fake-annotator";
  int max_transport_retries = 3;
  double backoff_base_seconds = 0.5;  // doubled per retry
  bool corrective_reprompt = true;
  std::function<void(double)> sleeper;  // injectable for tests; default sleeps
};

/// Send, parse, and retry: transport errors back off exponentially up to the
/// limit (then ServiceUnavailable); a parse failure triggers one corrective
/// re-prompt before the response is returned without a score.
LlmResponse annotate(ChatClient& client, const std::string& prompt,
                     const AnnotateOptions& opts);

/// Disk cache keyed by (model id, prompt hash); reruns never re-bill.
class AnnotationCache {
 public:
  explicit AnnotationCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& model, const std::string& prompt) const;
  void put(const std::string& model, const std::string& prompt, const std::string& raw) const;

 private:
  std::filesystem::path dir_;
  std::filesystem::path key_path(const std::string& model, const std::string& prompt) const;
};

/// Cache-aware segment annotation.
LlmResponse annotate_segment(ChatClient& client, AnnotationCache* cache,
                             const RubricPack& rubric, const Segment& segment,
                             const AnnotateOptions& opts, const PromptOptions& prompt_opts = {});

}  // namespace ew
