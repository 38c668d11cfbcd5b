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

#include "convrec/llm_gateway.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "convrec/error.hpp"
#include "convrec/hashing.hpp"

namespace convrec {

std::string PromptTemplate::rendered_format() const {
  static constexpr std::string_view kPlaceholder = "{n_candidates}";
  std::string out = format_text;
  const std::string count = std::to_string(n_candidates);
  for (auto pos = out.find(kPlaceholder); pos != std::string::npos;
       pos = out.find(kPlaceholder, pos + count.size())) {
    out.replace(pos, kPlaceholder.size(), count);
  }
  return out;
}

void PromptTemplate::validate() const {
  if (task_text.empty()) throw UsageError("prompt template task text is empty");
  if (format_text.empty()) throw UsageError("prompt template format text is empty");
  if (n_candidates < 1) throw UsageError("n_candidates must be at least 1");
}

std::string build_prompt(const std::vector<ConversationTurn>& context,
                         const PromptTemplate& prompt_template) {
  if (context.empty()) throw DataError("cannot build a prompt from an empty context");
  std::string prompt = prompt_template.task_text;
  prompt += "\n\n";
  prompt += prompt_template.rendered_format();
  prompt += "\n\nConversation:\n";
  for (const auto& turn : context) {
    prompt += turn.speaker == Speaker::kSeeker ? "Seeker: " : "Recommender: ";
    prompt += turn.text;
    prompt += '\n';
  }
  return prompt;
}

std::string prompt_hash(std::string_view prompt) { return sha256_hex(prompt); }

std::string_view to_string(ProviderMode mode) {
  switch (mode) {
    case ProviderMode::kLive:
      return "live";
    case ProviderMode::kReplay:
      return "replay";
    case ProviderMode::kRecord:
      return "record";
  }
  return "unknown";
}

std::optional<ProviderMode> parse_provider_mode(std::string_view name) {
  for (ProviderMode m : {ProviderMode::kLive, ProviderMode::kReplay, ProviderMode::kRecord}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void ProviderConfig::validate() const {
  if (temperature != 0.0) throw UsageError("provider temperature must be exactly 0");
  if (mode != ProviderMode::kLive && cassette_path.empty()) {
    throw UsageError(std::string(to_string(mode)) + " mode requires a cassette path");
  }
  if (mode != ProviderMode::kReplay && endpoint.empty()) {
    throw UsageError("live provider needs an endpoint");
  }
  if (max_in_flight < 1) throw UsageError("max_in_flight must be at least 1");
  if (!(timeout_seconds > 0)) throw UsageError("timeout must be positive");
}

void apply_provider_environment(ProviderConfig& config) {
  if (const char* base = std::getenv("LLM_API_BASE"); base != nullptr && *base != '\0') {
    config.endpoint = base;
  }
  if (const char* key = std::getenv("LLM_API_KEY"); key != nullptr && *key != '\0') {
    config.api_key = key;
  }
}

Cassette::Cassette(std::string path, bool create_if_missing) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    if (!create_if_missing) throw DataError("cannot open cassette " + path_);
    return;
  }
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      CassetteEntry entry{record.at("hash").get<std::string>(),
                          record.value("model", std::string()),
                          record.at("response").get<std::string>()};
      entries_.emplace(entry.hash, std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path_ + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::optional<CassetteEntry> Cassette::lookup(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool Cassette::append(const CassetteEntry& entry) {
  std::lock_guard lock(mutex_);
  if (entries_.contains(entry.hash)) return false;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot append to cassette " + path_);
  nlohmann::ordered_json record;
  record["hash"] = entry.hash;
  record["model"] = entry.model;
  record["response"] = entry.response;
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw DataError("failed writing cassette " + path_);
  entries_.emplace(entry.hash, entry);
  return true;
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string chat_request_body(std::string_view prompt, std::string_view model) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = 0;
  return body.dump();
}

std::string parse_chat_response(std::string_view body) {
  try {
    const auto json = nlohmann::json::parse(body);
    return json.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("unexpected provider response: ") + e.what());
  }
}

LlmGateway::LlmGateway(ProviderConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  config_.validate();
  if (config_.mode != ProviderMode::kLive) {
    cassette_ = std::make_unique<Cassette>(config_.cassette_path,
                                           config_.mode == ProviderMode::kRecord);
    std::ifstream probe(config_.cassette_path, std::ios::binary);
    cassette_hash_ = probe ? sha256_file(config_.cassette_path) : sha256_hex("");
  }
}

LlmGateway::~LlmGateway() = default;

std::string LlmGateway::complete(const std::string& prompt) {
  const std::string hash = prompt_hash(prompt);
  if (cassette_) {
    if (auto hit = cassette_->lookup(hash)) return hit->response;
    if (config_.mode == ProviderMode::kReplay) throw ReplayMissError(hash);
  }
  std::string response = call_provider(prompt);
  if (config_.mode == ProviderMode::kRecord) {
    cassette_->append({hash, config_.model, response});
  }
  return response;
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("endpoint must be an http(s) URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  static constexpr std::string_view kSuffix = "/chat/completions";
  if (e.path.size() < kSuffix.size() ||
      e.path.compare(e.path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
    e.path += kSuffix;
  }
  return e;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string LlmGateway::call_provider(const std::string& prompt) {
  const Endpoint endpoint = split_endpoint(config_.endpoint);
  const std::string body = chat_request_body(prompt, config_.model);

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{in_flight_};

  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double wait = config_.initial_backoff_seconds * static_cast<double>(1u << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    ++network_calls_;
    auto result = client.Post(endpoint.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) return parse_chat_response(result->body);
    last_error = "provider returned HTTP " + std::to_string(result->status);
    if (!retryable_status(result->status)) break;
  }
  throw ProviderError(last_error);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string remove_all(std::string text, std::string_view token) {
  for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos)) {
    text.erase(pos, token.size());
  }
  return text;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length of a list marker at the start of `s` ("12. ", "3) ", "- ", "* ",
// "• "), or 0 when there is none.
std::size_t marker_length(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  std::size_t after;
  if (i > 0 && i <= 3 && i < s.size() && (s[i] == '.' || s[i] == ')')) {
    after = i + 1;
  } else if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
    after = 1;
  } else if (s.rfind("\xE2\x80\xA2", 0) == 0) {  // U+2022 bullet
    after = 3;
  } else {
    return 0;
  }
  if (after >= s.size() || (s[after] != ' ' && s[after] != '\t')) return 0;
  return after;
}

// Item text after the marker, or nothing when the line holds no list item.
std::optional<std::string_view> list_item(std::string_view line) {
  if (std::size_t m = marker_length(line)) return trim(line.substr(m));
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const std::string_view rest = trim(line.substr(colon + 1));
  if (std::size_t m = marker_length(rest)) return trim(rest.substr(m));
  return std::nullopt;
}

std::string strip_decoration(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '*' || c == '`') continue;
    out.push_back(c);
  }
  std::string_view view = trim(out);
  while (!view.empty() && (view.front() == '_' || view.front() == '"')) view.remove_prefix(1);
  while (!view.empty() && (view.back() == '_' || view.back() == '"')) view.remove_suffix(1);
  // curly quotes
  for (std::string_view q : {"\xE2\x80\x9C", "\xE2\x80\x9D"}) {
    if (view.rfind(q, 0) == 0) view.remove_prefix(q.size());
    if (view.size() >= q.size() && view.substr(view.size() - q.size()) == q) {
      view.remove_suffix(q.size());
    }
  }
  return std::string(trim(view));
}

void split_title_year(std::string_view item, std::string& title, std::optional<int>& year) {
  for (std::size_t pos = item.find('('); pos != std::string_view::npos;
       pos = item.find('(', pos + 1)) {
    if (pos + 5 < item.size() && item[pos + 5] == ')' && is_digit(item[pos + 1]) &&
        is_digit(item[pos + 2]) && is_digit(item[pos + 3]) && is_digit(item[pos + 4])) {
      const int value = std::stoi(std::string(item.substr(pos + 1, 4)));
      if (value >= kMinYear && value <= kMaxYear) {
        year = value;
        title = strip_decoration(item.substr(0, pos));
        return;
      }
    }
  }
  year.reset();
  std::string_view head = item;
  for (std::string_view sep : {" - ", " \xE2\x80\x93 ", " \xE2\x80\x94 "}) {
    if (auto cut = head.find(sep); cut != std::string_view::npos) head = head.substr(0, cut);
  }
  title = strip_decoration(head);
}

}  // namespace

ParseResult parse_recommendations(std::string_view text, std::size_t n_max) {
  ParseResult result;
  std::size_t start = 0;
  while (start <= text.size() && result.recommendations.size() < n_max) {
    const auto end = std::min(text.find('\n', start), text.size());
    const std::string_view raw = text.substr(start, end - start);
    start = end + 1;
    const std::string_view line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string cleaned = remove_all(remove_all(std::string(line), "**"), "__");
    const auto item = list_item(trim(cleaned));
    ParsedRecommendation rec;
    if (item) split_title_year(*item, rec.title, rec.year);
    if (!item || rec.title.empty()) {
      ++result.n_unparsed_lines;
    } else {
      rec.raw_line = std::string(raw);
      rec.position = result.recommendations.size() + 1;
      result.recommendations.push_back(std::move(rec));
    }
    if (end == text.size()) break;
  }
  return result;
}

}  // namespace convrec
