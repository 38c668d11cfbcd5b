// Copyright 2026 The Authors.
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

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "convrec/corpus.hpp"

namespace convrec {

inline constexpr std::string_view kDefaultTaskText =
    "Pretend you are a movie recommender system. Based on the conversation, recommend movies "
    "the seeker will like.";
inline constexpr std::string_view kDefaultFormatText =
    "Reply with a numbered list of {n_candidates} movie titles, each as: <index>. <Title> "
    "(<Year>). No other text.";

struct PromptTemplate {
  std::string task_text{kDefaultTaskText};
  std::string format_text{kDefaultFormatText};
  std::size_t n_candidates = 20;

  // format_text with every "{n_candidates}" replaced.
  std::string rendered_format() const;
  // Throws UsageError on empty texts or n_candidates == 0.
  void validate() const;
};

// task, format and the serialized context ("Seeker: ..." / "Recommender: ...",
// one turn per line), separated by blank lines. The caller passes only the
// turns before the target turn. Throws DataError on an empty context.
std::string build_prompt(const std::vector<ConversationTurn>& context,
                         const PromptTemplate& prompt_template);

// SHA-256 of the prompt's UTF-8 bytes, lowercase hex.
std::string prompt_hash(std::string_view prompt);

enum class ProviderMode { kLive, kReplay, kRecord };

std::string_view to_string(ProviderMode mode);
std::optional<ProviderMode> parse_provider_mode(std::string_view name);

struct ProviderConfig {
  ProviderMode mode = ProviderMode::kReplay;
  std::string endpoint = "https://api.openai.com/v1";  // overridden by LLM_API_BASE
  std::string api_key;                                  // from LLM_API_KEY
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  double timeout_seconds = 60.0;
  std::string cassette_path;
  std::size_t max_in_flight = 4;
  std::size_t max_retries = 3;
  double initial_backoff_seconds = 0.5;

  // Throws UsageError when temperature != 0, a cassette is required but
  // missing, or a count is zero.
  void validate() const;
};

// Fills endpoint and api_key from LLM_API_BASE / LLM_API_KEY when set.
void apply_provider_environment(ProviderConfig& config);

struct CassetteEntry {
  std::string hash;
  std::string model;
  std::string response;
};

// Append-only JSONL store of prompt-hash -> response. Lookups may run
// concurrently; appends are serialized and flushed immediately.
class Cassette {
 public:
  // Loads `path`. A missing file is an error unless create_if_missing.
  explicit Cassette(std::string path, bool create_if_missing = false);

  std::optional<CassetteEntry> lookup(const std::string& hash) const;
  // Returns false, writing nothing, when the hash is already present.
  bool append(const CassetteEntry& entry);
  std::size_t size() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::map<std::string, CassetteEntry> entries_;
};

// Chat-completions request body: {model, messages:[{role:"user", content}],
// temperature: 0}.
std::string chat_request_body(std::string_view prompt, std::string_view model);
// choices[0].message.content; throws ProviderError on anything else.
std::string parse_chat_response(std::string_view body);

// Zero-shot completion client. Live mode calls the provider with
// temperature 0; record mode answers from the cassette when it can and
// records live answers otherwise; replay mode never touches the network.
class LlmGateway {
 public:
  explicit LlmGateway(ProviderConfig config);
  ~LlmGateway();

  LlmGateway(const LlmGateway&) = delete;
  LlmGateway& operator=(const LlmGateway&) = delete;

  // Throws ReplayMissError or ProviderError.
  std::string complete(const std::string& prompt);

  const ProviderConfig& config() const { return config_; }
  std::size_t network_calls() const { return network_calls_.load(); }
  // SHA-256 of the cassette file at construction time, or "" without one.
  const std::string& cassette_hash() const { return cassette_hash_; }

 private:
  std::string call_provider(const std::string& prompt);

  ProviderConfig config_;
  std::unique_ptr<Cassette> cassette_;
  std::string cassette_hash_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::size_t> network_calls_{0};
};

struct ParsedRecommendation {
  std::string raw_line;
  std::string title;
  std::optional<int> year;
  std::size_t position = 0;  // 1-based, in output order
};

struct ParseResult {
  std::vector<ParsedRecommendation> recommendations;
  std::size_t n_unparsed_lines = 0;
};

// Lenient list extraction from free text. Recognizes "<n>. Title (Year)",
// "<n>) Title", and "- Title" / "* Title" bullets, at line start or after a
// colon. Markdown emphasis is stripped. Never throws.
ParseResult parse_recommendations(std::string_view text, std::size_t n_max);

}  // namespace convrec
