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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/corpus.hpp"
#include "convrec/ranker.hpp"

namespace convrec {

struct EvalExample {
  std::string conversation_id;
  std::size_t target_turn = 0;
  std::vector<ConversationTurn> context;  // turns before the target
  std::vector<std::string> truth;         // mentions of the target turn
};

enum class TargetMode {
  kFinalTurn,  // one example per conversation
  kPerTurn,    // every recommender turn with a mention and a prior seeker turn
};

struct ExampleSet {
  std::vector<EvalExample> examples;
  std::size_t n_skipped = 0;  // conversations contributing no example
};

ExampleSet build_eval_examples(const std::vector<Conversation>& conversations,
                               TargetMode mode = TargetMode::kFinalTurn);

// Binary relevance over the first k ids. Duplicate truth ids count once.
double hit_at_k(std::span<const std::string> ranking, std::span<const std::string> truth,
                std::size_t k);
double ndcg_at_k(std::span<const std::string> ranking, std::span<const std::string> truth,
                 std::size_t k);

std::vector<std::string> ranked_ids(const ScoredRanking& ranking);

struct ExampleMetrics {
  std::string conversation_id;
  std::vector<double> hit;   // one per k
  std::vector<double> ndcg;  // one per k
  bool fallback_used = false;
};

ExampleMetrics score_example(const EvalExample& example, const ScoredRanking& ranking,
                             std::span<const std::size_t> ks, bool fallback_used);

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> standard_error;  // absent for fewer than 2 examples

  bool operator==(const MetricSummary&) const = default;
};

struct RunMetadata {
  std::string pipeline;
  std::string split;
  std::uint64_t seed = 0;
  std::string backbone;
  std::string template_hash;
  std::string cassette_hash;
  std::string embeddings_hash;
  std::string config_hash;

  bool operator==(const RunMetadata&) const = default;
};

struct MetricsReport {
  std::vector<std::size_t> ks;
  std::vector<MetricSummary> hit;
  std::vector<MetricSummary> ndcg;
  std::size_t n_examples = 0;
  std::size_t n_skipped = 0;
  double fallback_rate = 0.0;
  RunMetadata metadata;

  bool operator==(const MetricsReport&) const = default;
};

// Means in example order; standard error = sample stddev / sqrt(n).
MetricsReport aggregate(const std::vector<ExampleMetrics>& metrics, std::span<const std::size_t> ks,
                        RunMetadata metadata = {});

struct Improvement {
  std::string metric;             // "H@5", "N@10", ...
  double baseline = 0.0;
  double candidate = 0.0;
  std::optional<double> percent;  // absent when the baseline is 0
};

// 100 * (b - a) / a for every metric. Throws UsageError when the reports
// use different k grids or example counts.
std::vector<Improvement> compare_runs(const MetricsReport& a, const MetricsReport& b);

struct EvaluateOptions {
  std::vector<std::size_t> ks{1, 5, 10};
  std::size_t n_threads = 1;
};

// Runs the recommender over every example. Results are reduced in example
// order, so the report does not depend on n_threads.
MetricsReport evaluate(const Recommender& recommender, const ExampleSet& examples,
                       const EvaluateOptions& options, RunMetadata metadata = {});

std::vector<std::size_t> parse_k_list(std::string_view text);

nlohmann::ordered_json to_json(const MetricsReport& report);
nlohmann::ordered_json to_json(const std::vector<Improvement>& improvements);

}  // namespace convrec
