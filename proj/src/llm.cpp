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

#include "ew/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/sha256.hpp"
#include "ew/util.hpp"

#ifdef EW_WITH_HTTP
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#endif

using nlohmann::json;

namespace ew {

RubricPack RubricPack::load_dir(const std::filesystem::path& dir) {
  RubricPack p;
  p.definition = read_text_file(dir / "definition.txt");
  p.examples = read_text_file(dir / "examples.txt");
  p.rubric = read_text_file(dir / "rubric.txt");
  p.validate();
  return p;
}

RubricPack RubricPack::builtin() {
  RubricPack p;
  p.definition =
      "Encouragement and Warmth captures how far the teacher supports students\n"
      "with positive verbal and nonverbal cues and how much shared warmth the\n"
      "classroom shows. Encouragement covers reassurance after mistakes,\n"
      "positive comments, and compliments on student work; warmth covers\n"
      "smiling, laughter, joking, and playfulness shared between teacher and\n"
      "students.\n";
  p.examples =
      "- The teacher praises a student's solution or effort.\n"
      "- The teacher reassures a student after an error and invites another try.\n"
      "- Teacher and students laugh together or exchange a light joke.\n"
      "- The teacher thanks students or acknowledges their contributions.\n";
  p.rubric =
      "1: No evidence of encouragement or warmth in the segment.\n"
      "2: Isolated instances; brief or formulaic positive remarks only.\n"
      "3: Several clear instances of encouragement or shared warmth.\n"
      "4: Frequent encouragement and warmth sustained throughout the segment.\n";
  return p;
}

void RubricPack::validate() const {
  if (trim(definition).empty() || trim(examples).empty() || trim(rubric).empty())
    throw Error("rubric pack: all three parts must be non-empty");
}

std::string RubricPack::version() const {
  return sha256_hex16(definition + "\x1f" + examples + "\x1f" + rubric);
}

int estimate_tokens(const std::string& text) {
  return static_cast<int>((text.size() + 3) / 4);
}

std::string build_prompt(const RubricPack& rubric, const Segment& segment,
                         const PromptOptions& opts) {
  rubric.validate();
  std::string p;
  p += "You are an experienced classroom observer. Rate the Encouragement and\n";
  p += "Warmth evident in the following lesson transcript segment on a scale\n";
  p += "from 1 (no evidence) to 4 (frequent instances).\n\n";
  p += "DEFINITION:\n" + rubric.definition + "\n";
  p += "BEHAVIORAL EXAMPLES:\n" + rubric.examples + "\n";
  p += "CODING RUBRIC:\n" + rubric.rubric + "\n";
  p += "TRANSCRIPT:\n";
  for (const auto& u : segment.utterances) p += u.speaker + ": " + u.text + "\n";
  p += "\nReply with exactly two lines:\n";
  p += "SCORE: <1-4>\n";
  p += "REASONING: <why you assigned this score, citing utterances>\n";
  if (estimate_tokens(p) > opts.max_tokens)
    throw PromptTooLong("estimated " + std::to_string(estimate_tokens(p)) + " tokens > budget " +
                        std::to_string(opts.max_tokens));
  return p;
}

std::string strict_format_reminder() {
  return "\nIMPORTANT: your previous reply could not be parsed. Respond again\n"
         "with the first line exactly `SCORE: N` where N is a single digit\n"
         "from 1 to 4, followed by a line starting with `REASONING:`.\n";
}

namespace {

std::optional<int> read_small_int(const std::string& lower, std::size_t pos) {
  // Integer digit or a spelled-out English number word at `pos`.
  if (pos < lower.size() && lower[pos] >= '0' && lower[pos] <= '9') {
    // Reject multi-digit numbers like 10.
    if (pos + 1 < lower.size() && lower[pos + 1] >= '0' && lower[pos + 1] <= '9')
      return std::nullopt;
    return lower[pos] - '0';
  }
  static const std::pair<const char*, int> words[] = {
      {"one", 1}, {"two", 2}, {"three", 3}, {"four", 4}, {"five", 5}};
  for (const auto& [w, v] : words)
    if (lower.compare(pos, std::char_traits<char>::length(w), w) == 0) return v;
  return std::nullopt;
}

std::optional<int> scan_for_score(const std::string& raw, const std::string& keyword) {
  const std::string lower = lower_ascii(raw);
  std::size_t from = 0;
  while (true) {
    std::size_t at = lower.find(keyword, from);
    if (at == std::string::npos) return std::nullopt;
    std::size_t pos = at + keyword.size();
    // Skip separators and light markup between the keyword and the number.
    const std::string skip_words[] = {"is", "of", "would", "be", "a", "the"};
    std::size_t guard = pos + 24;
    while (pos < lower.size() && pos < guard) {
      char c = lower[pos];
      static const std::string seps = " :=-*_#\"'().\t\n\r[]{}<>,;/|!?";
      if (seps.find(c) != std::string::npos || static_cast<unsigned char>(c) >= 0x80) {
        ++pos;
        continue;
      }
      bool skipped = false;
      for (const auto& w : skip_words) {
        if (lower.compare(pos, w.size(), w) == 0 && pos + w.size() < lower.size() &&
            !std::isalnum(static_cast<unsigned char>(lower[pos + w.size()]))) {
          pos += w.size();
          skipped = true;
          break;
        }
      }
      if (!skipped) break;
    }
    if (auto v = read_small_int(lower, pos); v && *v >= 1 && *v <= 4) return v;
    from = at + keyword.size();
  }
}

}  // namespace

std::pair<std::optional<int>, std::string> parse_response(const std::string& raw) {
  std::optional<int> score = scan_for_score(raw, "score");
  if (!score) score = scan_for_score(raw, "rating");

  std::string reasoning = trim(raw);
  const std::string lower = lower_ascii(raw);
  std::size_t at = lower.find("reasoning");
  if (at != std::string::npos) {
    std::size_t pos = at + 9;
    while (pos < raw.size() && (raw[pos] == ':' || raw[pos] == ' ' || raw[pos] == '*' ||
                                raw[pos] == '-' || raw[pos] == '='))
      ++pos;
    reasoning = trim(raw.substr(pos));
  }
  return {score, reasoning};
}

// ----- clients -----

std::unique_ptr<FakeChatClient> FakeChatClient::scripted(std::vector<std::string> responses) {
  auto c = std::make_unique<FakeChatClient>();
  c->responses_ = std::move(responses);
  return c;
}

std::unique_ptr<FakeChatClient> FakeChatClient::heuristic(Lexicon lexicon) {
  auto c = std::make_unique<FakeChatClient>();
  c->lexicon_ = std::move(lexicon);
  return c;
}

std::string FakeChatClient::send(const ChatRequest& request) {
  ++calls_;
  if (fail_next_ > 0) {
    --fail_next_;
    throw ServiceUnavailable("scripted transport failure");
  }
  if (!lexicon_) {
    if (next_ >= responses_.size()) throw ServiceUnavailable("scripted responses exhausted");
    return responses_[next_++];
  }
  // Heuristic mode: score the transcript section by its share of positive
  // turns, mapping frequency to the 1-4 scale.
  std::size_t begin = request.prompt.find("TRANSCRIPT:\n");
  std::size_t end = request.prompt.find("\nReply with");
  std::string transcript = begin == std::string::npos
                               ? request.prompt
                               : request.prompt.substr(begin + 12,
                                                       end == std::string::npos ? std::string::npos
                                                                                : end - begin - 12);
  int turns = 0, positive = 0;
  for (const auto& line : split(transcript, '\n')) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    ++turns;
    if (lexicon_->score(line.substr(colon + 1)) > 0.0) ++positive;
  }
  double frac = turns ? static_cast<double>(positive) / turns : 0.0;
  int score = frac < 0.20 ? 1 : frac < 0.35 ? 2 : frac < 0.50 ? 3 : 4;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "SCORE: %d\nREASONING: %d of %d turns carry positive cues "
                "(rate %.2f), matching rubric level %d.",
                score, positive, turns, frac, score);
  return buf;
}

HttpChatClient::HttpChatClient(Options opts) : opts_(std::move(opts)) {}

std::string HttpChatClient::send(const ChatRequest& request) {
#ifdef EW_WITH_HTTP
  const char* key = std::getenv(opts_.api_key_env.c_str());
  if (!key || !*key) throw AuthError("environment variable " + opts_.api_key_env + " not set");

  json body = {{"model", request.model},
               {"temperature", request.temperature},
               {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};

  httplib::Client cli(opts_.host);
  cli.set_connection_timeout(opts_.timeout_seconds);
  cli.set_read_timeout(opts_.timeout_seconds);
  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
  auto res = cli.Post(opts_.path, headers, body.dump(), "application/json");
  if (!res) throw ServiceUnavailable("transport error contacting " + opts_.host);
  if (res->status == 401 || res->status == 403)
    throw AuthError("HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw ServiceUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body);
  try {
    json reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ServiceUnavailable(std::string("malformed completion payload: ") + e.what());
  }
#else
  (void)request;
  throw ServiceUnavailable("built without HTTP support");
#endif
}

LlmResponse annotate(ChatClient& client, const std::string& prompt, const AnnotateOptions& opts) {
  std::function<void(double)> sleeper = opts.sleeper;
  if (!sleeper)
    sleeper = [](double seconds) {
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };

  auto send_with_retries = [&](const std::string& text) -> std::pair<std::string, int> {
    int retries = 0;
    while (true) {
      try {
        return {client.send(ChatRequest{text, opts.model, 0.0}), retries};
      } catch (const AuthError&) {
        throw;
      } catch (const ServiceUnavailable&) {
        if (retries >= opts.max_transport_retries)
          throw ServiceUnavailable("giving up after " + std::to_string(retries) + " retries");
        sleeper(opts.backoff_base_seconds * std::pow(2.0, retries));
        ++retries;
      }
    }
  };

  LlmResponse out;
  out.model_id = opts.model;
  auto [raw, retries] = send_with_retries(prompt);
  out.transport_retries = retries;
  auto [score, reasoning] = parse_response(raw);
  if (!score && opts.corrective_reprompt) {
    out.reprompted = true;
    auto [raw2, retries2] = send_with_retries(prompt + strict_format_reminder());
    out.transport_retries += retries2;
    auto [score2, reasoning2] = parse_response(raw2);
    if (score2) {
      raw = raw2;
      score = score2;
      reasoning = reasoning2;
    }
  }
  out.raw = raw;
  out.score = score;
  out.reasoning = reasoning;
  return out;
}

AnnotationCache::AnnotationCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path AnnotationCache::key_path(const std::string& model,
                                                const std::string& prompt) const {
  return dir_ / (sha256_hex16(model + "\x1f" + prompt) + ".json");
}

std::optional<std::string> AnnotationCache::get(const std::string& model,
                                                const std::string& prompt) const {
  auto p = key_path(model, prompt);
  if (!std::filesystem::exists(p)) return std::nullopt;
  json j = json::parse(read_text_file(p));
  return j.at("raw").get<std::string>();
}

void AnnotationCache::put(const std::string& model, const std::string& prompt,
                          const std::string& raw) const {
  json j = {{"model", model}, {"prompt_hash", sha256_hex16(prompt)}, {"raw", raw}};
  write_text_file(key_path(model, prompt), j.dump(2) + "\n");
}

LlmResponse annotate_segment(ChatClient& client, AnnotationCache* cache,
                             const RubricPack& rubric, const Segment& segment,
                             const AnnotateOptions& opts, const PromptOptions& prompt_opts) {
  const std::string prompt = build_prompt(rubric, segment, prompt_opts);
  if (cache) {
    if (auto hit = cache->get(opts.model, prompt)) {
      LlmResponse out;
      out.model_id = opts.model;
      out.raw = *hit;
      auto [score, reasoning] = parse_response(*hit);
      out.score = score;
      out.reasoning = reasoning;
      return out;
    }
  }
  LlmResponse out = annotate(client, prompt, opts);
  if (cache && out.score) cache->put(opts.model, prompt, out.raw);
  return out;
}

}  // namespace ew
