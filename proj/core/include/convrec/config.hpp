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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/corpus.hpp"
#include "convrec/embeddings.hpp"
#include "convrec/evaluator.hpp"
#include "convrec/llm_gateway.hpp"

namespace convrec {

struct PathConfig {
  std::string catalog;
  CatalogFormat catalog_format = CatalogFormat::kCsv;
  std::string interactions;
  std::string conversations;
  std::string embeddings;
  std::string cassette;
  std::string alias_table;
};

struct RankerConfig {
  std::size_t k = 10;
  std::string fallback = "popularity";  // the only supported policy
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_concurrent_requests = 16;
  std::string auth_token;  // empty: no auth; CONVREC_SERVICE_TOKEN overrides
  std::string cors_origin = "*";
};

struct EvalConfig {
  std::vector<std::size_t> ks{1, 5, 10};
  TargetMode target_mode = TargetMode::kFinalTurn;
  std::size_t n_threads = 1;
};

struct AppConfig {
  PathConfig paths;
  ProviderConfig provider;
  PromptTemplate prompt;
  TrainingConfig training;
  RankerConfig ranker;
  SplitRatios split;
  std::uint64_t split_seed = 13;
  ServiceConfig service;
  EvalConfig eval;
};

// Unknown keys and wrongly typed values raise UsageError naming the key.
// Relative paths are resolved against base_dir when it is non-empty.
AppConfig app_config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
AppConfig load_app_config(const std::string& path);

// LLM_API_BASE, LLM_API_KEY, CONVREC_SERVICE_TOKEN.
void apply_environment(AppConfig& config);

// Secrets are never serialized.
nlohmann::ordered_json to_json(const AppConfig& config);
// SHA-256 of to_json() without the paths section and eval.n_threads.
std::string config_hash(const AppConfig& config);
std::string template_hash(const PromptTemplate& prompt_template);

}  // namespace convrec
