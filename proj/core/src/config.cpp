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

#include "convrec/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "convrec/error.hpp"
#include "convrec/hashing.hpp"

namespace convrec {

namespace {

using Json = nlohmann::json;

// Walks one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw UsageError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError("config: '" + where(key) + "' has the wrong type");
    }
  }

  void read_with(const std::string& key, const std::function<void(const Json&)>& fn) {
    seen_.push_back(key);
    if (j_.contains(key)) fn(j_.at(key));
  }

  std::string where(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw UsageError("config: unknown key '" + where(key) + "'");
      }
    }
  }

 private:
  const Json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

std::string string_value(const Json& j, const std::string& where) {
  if (!j.is_string()) throw UsageError("config: '" + where + "' must be a string");
  return j.get<std::string>();
}

}  // namespace

AppConfig app_config_from_json(const Json& j, const std::string& base_dir) {
  AppConfig c;
  Section root(j, "");

  root.read_with("paths", [&](const Json& v) {
    Section s(v, "paths");
    auto& p = c.paths;
    s.read("catalog", p.catalog);
    s.read_with("catalog_format", [&](const Json& f) {
      const auto name = string_value(f, "paths.catalog_format");
      if (name == "csv") {
        p.catalog_format = CatalogFormat::kCsv;
      } else if (name == "jsonl") {
        p.catalog_format = CatalogFormat::kJsonl;
      } else {
        throw UsageError("config: 'paths.catalog_format' must be csv or jsonl");
      }
    });
    s.read("interactions", p.interactions);
    s.read("conversations", p.conversations);
    s.read("embeddings", p.embeddings);
    s.read("cassette", p.cassette);
    s.read("alias_table", p.alias_table);
    s.finish();
    for (auto* field : {&p.catalog, &p.interactions, &p.conversations, &p.embeddings,
                        &p.cassette, &p.alias_table}) {
      *field = resolve(*field, base_dir);
    }
  });

  root.read_with("provider", [&](const Json& v) {
    Section s(v, "provider");
    auto& p = c.provider;
    s.read_with("mode", [&](const Json& m) {
      const auto mode = parse_provider_mode(string_value(m, "provider.mode"));
      if (!mode) throw UsageError("config: 'provider.mode' must be live, replay or record");
      p.mode = *mode;
    });
    s.read("endpoint", p.endpoint);
    s.read("model", p.model);
    s.read("temperature", p.temperature);
    s.read("timeout_seconds", p.timeout_seconds);
    s.read("max_in_flight", p.max_in_flight);
    s.read("max_retries", p.max_retries);
    s.read("initial_backoff_seconds", p.initial_backoff_seconds);
    s.finish();
  });

  root.read_with("prompt", [&](const Json& v) {
    Section s(v, "prompt");
    s.read("task_text", c.prompt.task_text);
    s.read("format_text", c.prompt.format_text);
    s.read("n_candidates", c.prompt.n_candidates);
    s.finish();
  });

  root.read_with("training", [&](const Json& v) {
    Section s(v, "training");
    auto& t = c.training;
    s.read_with("backbone", [&](const Json& b) {
      const auto backbone = parse_backbone(string_value(b, "training.backbone"));
      if (!backbone) throw UsageError("config: unknown 'training.backbone'");
      t.backbone = *backbone;
    });
    s.read("dim", t.dim);
    s.read("epochs", t.epochs);
    s.read("learning_rate", t.learning_rate);
    s.read("negatives_per_positive", t.negatives_per_positive);
    s.read("window", t.window);
    s.read("max_seq_len", t.max_seq_len);
    s.read("n_heads", t.n_heads);
    s.read("n_blocks", t.n_blocks);
    s.read("seed", t.seed);
    s.read_with("loss_mode", [&](const Json& m) {
      const auto mode = parse_loss_mode(string_value(m, "training.loss_mode"));
      if (!mode) throw UsageError("config: unknown 'training.loss_mode'");
      t.loss_mode = *mode;
    });
    s.read("full_softmax_limit", t.full_softmax_limit);
    s.finish();
  });

  root.read_with("ranker", [&](const Json& v) {
    Section s(v, "ranker");
    s.read("k", c.ranker.k);
    s.read("fallback", c.ranker.fallback);
    s.finish();
    if (c.ranker.fallback != "popularity") {
      throw UsageError("config: 'ranker.fallback' supports only \"popularity\"");
    }
  });

  root.read_with("split", [&](const Json& v) {
    Section s(v, "split");
    s.read("train", c.split.train);
    s.read("valid", c.split.valid);
    s.read("test", c.split.test);
    s.read("seed", c.split_seed);
    s.finish();
  });

  root.read_with("service", [&](const Json& v) {
    Section s(v, "service");
    s.read("host", c.service.host);
    s.read("port", c.service.port);
    s.read("max_concurrent_requests", c.service.max_concurrent_requests);
    s.read("auth_token", c.service.auth_token);
    s.read("cors_origin", c.service.cors_origin);
    s.finish();
  });

  root.read_with("eval", [&](const Json& v) {
    Section s(v, "eval");
    s.read("ks", c.eval.ks);
    s.read_with("target_mode", [&](const Json& m) {
      const auto name = string_value(m, "eval.target_mode");
      if (name == "final") {
        c.eval.target_mode = TargetMode::kFinalTurn;
      } else if (name == "per-turn") {
        c.eval.target_mode = TargetMode::kPerTurn;
      } else {
        throw UsageError("config: 'eval.target_mode' must be final or per-turn");
      }
    });
    s.read("n_threads", c.eval.n_threads);
    s.finish();
  });
  root.finish();

  c.provider.cassette_path = c.paths.cassette;
  if (c.ranker.k == 0) throw UsageError("config: 'ranker.k' must be positive");
  if (c.service.port < 0 || c.service.port > 65535) {
    throw UsageError("config: 'service.port' out of range");
  }
  if (c.service.max_concurrent_requests == 0) {
    throw UsageError("config: 'service.max_concurrent_requests' must be positive");
  }
  for (std::size_t k : c.eval.ks) {
    if (k == 0) throw UsageError("config: 'eval.ks' entries must be positive");
  }
  c.prompt.validate();
  validate(c.training);
  return c;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path().string();
  return app_config_from_json(j, dir);
}

void apply_environment(AppConfig& config) {
  apply_provider_environment(config.provider);
  if (const char* token = std::getenv("CONVREC_SERVICE_TOKEN"); token && *token) {
    config.service.auth_token = token;
  }
}

nlohmann::ordered_json to_json(const AppConfig& c) {
  nlohmann::ordered_json out;
  out["paths"] = {{"catalog", c.paths.catalog},
                  {"catalog_format", c.paths.catalog_format == CatalogFormat::kCsv ? "csv" : "jsonl"},
                  {"interactions", c.paths.interactions},
                  {"conversations", c.paths.conversations},
                  {"embeddings", c.paths.embeddings},
                  {"cassette", c.paths.cassette},
                  {"alias_table", c.paths.alias_table}};
  out["provider"] = {{"mode", to_string(c.provider.mode)},
                     {"endpoint", c.provider.endpoint},
                     {"model", c.provider.model},
                     {"temperature", c.provider.temperature},
                     {"timeout_seconds", c.provider.timeout_seconds},
                     {"max_in_flight", c.provider.max_in_flight},
                     {"max_retries", c.provider.max_retries},
                     {"initial_backoff_seconds", c.provider.initial_backoff_seconds}};
  out["prompt"] = {{"task_text", c.prompt.task_text},
                   {"format_text", c.prompt.format_text},
                   {"n_candidates", c.prompt.n_candidates}};
  const auto& t = c.training;
  out["training"] = {{"backbone", to_string(t.backbone)},
                     {"dim", t.dim},
                     {"epochs", t.epochs},
                     {"learning_rate", t.learning_rate},
                     {"negatives_per_positive", t.negatives_per_positive},
                     {"window", t.window},
                     {"max_seq_len", t.max_seq_len},
                     {"n_heads", t.n_heads},
                     {"n_blocks", t.n_blocks},
                     {"seed", t.seed},
                     {"loss_mode", to_string(t.loss_mode)},
                     {"full_softmax_limit", t.full_softmax_limit}};
  out["ranker"] = {{"k", c.ranker.k}, {"fallback", c.ranker.fallback}};
  out["split"] = {{"train", c.split.train},
                  {"valid", c.split.valid},
                  {"test", c.split.test},
                  {"seed", c.split_seed}};
  out["service"] = {{"host", c.service.host},
                    {"port", c.service.port},
                    {"max_concurrent_requests", c.service.max_concurrent_requests},
                    {"cors_origin", c.service.cors_origin}};
  out["eval"] = {{"ks", c.eval.ks},
                 {"target_mode", c.eval.target_mode == TargetMode::kFinalTurn ? "final" : "per-turn"},
                 {"n_threads", c.eval.n_threads}};
  return out;
}

std::string config_hash(const AppConfig& config) {
  auto j = to_json(config);
  j.erase("paths");
  j["eval"].erase("n_threads");
  return sha256_hex(j.dump());
}

std::string template_hash(const PromptTemplate& t) {
  nlohmann::ordered_json j = {
      {"task_text", t.task_text}, {"format_text", t.format_text}, {"n_candidates", t.n_candidates}};
  return sha256_hex(j.dump());
}

}  // namespace convrec
