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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/config.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embeddings.hpp"
#include "convrec/llm_gateway.hpp"
#include "convrec/ranker.hpp"

namespace convrec {

inline constexpr std::size_t kMaxRequestK = 100;
inline constexpr std::size_t kMaxSearchLimit = 100;

// Artifacts loaded once at startup and never modified afterwards. Build
// with load_service_state(); the recommender points into the same object.
struct ServiceState {
  Catalog catalog;
  EmbeddingMatrix embeddings;
  PopularityScores popularity;
  std::unique_ptr<LlmGateway> gateway;
  std::unique_ptr<Recommender> recommender;
  // role -> SHA-256 of the file it was loaded from
  std::map<std::string, std::string> artifact_hashes;
};

// Needs paths.catalog and paths.embeddings; paths.interactions is optional
// and only feeds the popularity fallback.
std::shared_ptr<ServiceState> load_service_state(const AppConfig& config);

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Endpoint logic without the transport, so tests can call it directly.
class RecommendService {
 public:
  RecommendService(std::shared_ptr<const ServiceState> state, ServiceConfig config,
                   std::size_t default_k);

  // POST /v1/recommend
  HttpResponse recommend(const std::string& body, const std::string& authorization) const;
  // GET /v1/health
  HttpResponse health() const;
  // GET /v1/items/search?q=&limit=
  HttpResponse search(const std::string& query, const std::string& limit,
                      const std::string& authorization) const;

  const ServiceConfig& config() const { return config_; }

 private:
  bool authorized(const std::string& authorization) const;

  std::shared_ptr<const ServiceState> state_;
  ServiceConfig config_;
  std::size_t default_k_;
  std::vector<std::pair<std::string, std::size_t>> by_title_;  // sorted normalized titles
  mutable std::atomic<std::size_t> in_flight_{0};
};

// httplib transport around RecommendService.
class HttpServer {
 public:
  explicit HttpServer(const RecommendService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port; port 0 picks a free one. Throws DataError.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  // Returns once run() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace convrec
