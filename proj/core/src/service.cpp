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

#include "convrec/service.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include <httplib.h>

#include "convrec/error.hpp"
#include "convrec/hashing.hpp"
#include "convrec/title.hpp"

namespace convrec {

namespace {

using Json = nlohmann::ordered_json;

struct FieldError {
  std::string field;
  std::string message;
};

HttpResponse json_response(int status, const Json& body) {
  return {status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, std::string_view code, const std::string& message,
                            const std::string& field = "") {
  Json error;
  error["code"] = code;
  error["message"] = message;
  if (!field.empty()) error["field"] = field;
  Json body;
  body["error"] = std::move(error);
  if (status == 502) body["fallback_used"] = false;
  return json_response(status, body);
}

struct ParsedRequest {
  std::vector<ConversationTurn> turns;
  std::size_t k = 0;
};

ParsedRequest parse_request(const nlohmann::json& j, std::size_t default_k) {
  if (!j.is_object()) throw FieldError{"", "request body must be a JSON object"};
  ParsedRequest req;
  req.k = default_k;
  if (j.contains("session_id") && !j["session_id"].is_string()) {
    throw FieldError{"session_id", "must be a string"};
  }
  if (!j.contains("turns")) throw FieldError{"turns", "is required"};
  const auto& turns = j["turns"];
  if (!turns.is_array()) throw FieldError{"turns", "must be an array"};
  if (turns.empty()) throw FieldError{"turns", "must not be empty"};
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const std::string at = "turns[" + std::to_string(i) + "]";
    const auto& t = turns[i];
    if (!t.is_object()) throw FieldError{at, "must be an object"};
    if (!t.contains("speaker") || !t["speaker"].is_string()) {
      throw FieldError{at + ".speaker", "must be a string"};
    }
    const auto speaker = parse_speaker(t["speaker"].get<std::string>());
    if (!speaker) throw FieldError{at + ".speaker", "must be \"seeker\" or \"recommender\""};
    if (!t.contains("text") || !t["text"].is_string()) {
      throw FieldError{at + ".text", "must be a string"};
    }
    ConversationTurn turn;
    turn.speaker = *speaker;
    turn.text = t["text"].get<std::string>();
    req.turns.push_back(std::move(turn));
  }
  if (j.contains("k")) {
    const auto& k = j["k"];
    if (!k.is_number_integer()) throw FieldError{"k", "must be an integer"};
    const auto value = k.get<std::int64_t>();
    if (value < 1 || value > static_cast<std::int64_t>(kMaxRequestK)) {
      throw FieldError{"k", "k out of range"};
    }
    req.k = static_cast<std::size_t>(value);
  }
  return req;
}

class InFlightGuard {
 public:
  InFlightGuard(std::atomic<std::size_t>& counter, std::size_t cap) : counter_(counter) {
    admitted_ = counter_.fetch_add(1) < cap;
  }
  ~InFlightGuard() { counter_.fetch_sub(1); }
  bool admitted() const { return admitted_; }

 private:
  std::atomic<std::size_t>& counter_;
  bool admitted_ = false;
};

}  // namespace

std::shared_ptr<ServiceState> load_service_state(const AppConfig& config) {
  const auto& paths = config.paths;
  if (paths.catalog.empty()) throw UsageError("service needs paths.catalog");
  if (paths.embeddings.empty()) throw UsageError("service needs paths.embeddings");
  auto state = std::make_shared<ServiceState>();
  state->catalog = load_catalog(paths.catalog, paths.catalog_format);
  state->artifact_hashes["catalog"] = sha256_file(paths.catalog);
  state->embeddings = load_embeddings(paths.embeddings);
  state->artifact_hashes["embeddings"] = sha256_file(paths.embeddings);
  if (!paths.interactions.empty()) {
    const auto load = load_interactions(paths.interactions, state->catalog, 1);
    state->popularity = compute_popularity(load.sequences, state->embeddings.item_ids());
    state->artifact_hashes["interactions"] = sha256_file(paths.interactions);
  } else {
    state->popularity = compute_popularity({}, state->embeddings.item_ids());
  }
  config.provider.validate();
  state->gateway = std::make_unique<LlmGateway>(config.provider);
  if (!state->gateway->cassette_hash().empty()) {
    state->artifact_hashes["cassette"] = state->gateway->cassette_hash();
  }
  LlmPipelineParts parts{&state->catalog, &state->embeddings, state->gateway.get(),
                         config.prompt, state->popularity};
  state->recommender = std::make_unique<BridgeRecommender>(std::move(parts));
  return state;
}

RecommendService::RecommendService(std::shared_ptr<const ServiceState> state,
                                   ServiceConfig config, std::size_t default_k)
    : state_(std::move(state)), config_(std::move(config)), default_k_(default_k) {
  if (!state_ || !state_->recommender) throw UsageError("service state has no recommender");
  if (default_k_ < 1 || default_k_ > kMaxRequestK) throw UsageError("default k out of range");
  const auto& items = state_->catalog.items();
  by_title_.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    by_title_.emplace_back(normalize_title(items[i].title), i);
  }
  std::sort(by_title_.begin(), by_title_.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return items[a.second].item_id < items[b.second].item_id;
  });
}

bool RecommendService::authorized(const std::string& authorization) const {
  return config_.auth_token.empty() || authorization == "Bearer " + config_.auth_token;
}

HttpResponse RecommendService::recommend(const std::string& body,
                                         const std::string& authorization) const {
  if (!authorized(authorization)) {
    return error_response(401, "unauthorized", "missing or invalid bearer token");
  }
  InFlightGuard guard(in_flight_, config_.max_concurrent_requests);
  if (!guard.admitted()) return error_response(429, "overloaded", "too many concurrent requests");

  ParsedRequest req;
  try {
    req = parse_request(nlohmann::json::parse(body), default_k_);
  } catch (const nlohmann::json::parse_error&) {
    return error_response(400, "invalid_request", "request body is not valid JSON", "body");
  } catch (const FieldError& e) {
    const std::string message = e.field.empty() ? e.message
                                : e.message == "k out of range"
                                    ? e.message
                                    : "'" + e.field + "' " + e.message;
    return error_response(400, "invalid_request", message, e.field);
  }

  Recommendation rec;
  try {
    rec = state_->recommender->recommend(req.turns, req.k);
  } catch (const ReplayMissError& e) {
    return error_response(502, "provider_error", e.what());
  } catch (const ProviderError& e) {
    return error_response(502, "provider_error", e.what());
  }

  Json items = Json::array();
  for (const auto& e : rec.ranking.entries) {
    Json item;
    item["item_id"] = e.item_id;
    const auto* record = state_->catalog.find_by_id(e.item_id);
    item["title"] = record ? record->title : "";
    item["year"] = record && record->year ? Json(*record->year) : Json();
    item["score"] = e.score;
    item["provenance"] = to_string(e.provenance);
    items.push_back(std::move(item));
  }
  Json out;
  out["items"] = std::move(items);
  out["fallback_used"] = rec.fallback_used;
  out["diagnostics"] = {{"n_parsed", rec.diagnostics.n_parsed},
                        {"n_matched", rec.diagnostics.n_matched},
                        {"n_ambiguous", rec.diagnostics.n_ambiguous}};
  return json_response(200, out);
}

HttpResponse RecommendService::health() const {
  Json out;
  out["status"] = "ok";
  out["n_items"] = state_->embeddings.size();
  out["pipeline"] = state_->recommender->name();
  Json hashes = Json::object();
  for (const auto& [role, hash] : state_->artifact_hashes) hashes[role] = hash;
  out["artifacts"] = std::move(hashes);
  return json_response(200, out);
}

HttpResponse RecommendService::search(const std::string& query, const std::string& limit,
                                      const std::string& authorization) const {
  if (!authorized(authorization)) {
    return error_response(401, "unauthorized", "missing or invalid bearer token");
  }
  std::size_t n = 10;
  if (!limit.empty()) {
    const auto [ptr, ec] = std::from_chars(limit.data(), limit.data() + limit.size(), n);
    if (ec != std::errc() || ptr != limit.data() + limit.size() || n < 1 || n > kMaxSearchLimit) {
      return error_response(400, "invalid_request", "limit out of range", "limit");
    }
  }
  const std::string prefix = normalize_title(query);
  if (prefix.empty()) return error_response(400, "invalid_request", "'q' is required", "q");

  Json items = Json::array();
  auto it = std::lower_bound(by_title_.begin(), by_title_.end(), prefix,
                             [](const auto& entry, const std::string& p) { return entry.first < p; });
  for (; it != by_title_.end() && items.size() < n; ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    const auto& record = state_->catalog.at(it->second);
    Json item;
    item["item_id"] = record.item_id;
    item["title"] = record.title;
    item["year"] = record.year ? Json(*record.year) : Json();
    items.push_back(std::move(item));
  }
  Json out;
  out["items"] = std::move(items);
  return json_response(200, out);
}

struct HttpServer::Impl {
  explicit Impl(const RecommendService& s) : service(s) {}
  const RecommendService& service;
  httplib::Server server;
};

HttpServer::HttpServer(const RecommendService& service)
    : impl_(std::make_unique<Impl>(service)) {
  auto& server = impl_->server;
  const std::string origin = service.config().cors_origin;
  const std::size_t n_workers = std::max<std::size_t>(service.config().max_concurrent_requests + 2, 4);
  server.new_task_queue = [n_workers] { return new httplib::ThreadPool(n_workers); };
  server.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Post("/v1/recommend", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.recommend(req.body, req.get_header_value("Authorization")));
  });
  server.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, impl_->service.health());
  });
  server.Get("/v1/items/search", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, impl_->service.search(req.get_param_value("q"), req.get_param_value("limit"),
                                    req.get_header_value("Authorization")));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                  std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(Json{{"error", {{"code", "internal"}, {"message", message}}}}.dump(),
                    "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw DataError("cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace convrec
