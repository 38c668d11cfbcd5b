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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/corpus.hpp"
#include "convrec/embeddings.hpp"
#include "convrec/llm_gateway.hpp"
#include "convrec/matcher.hpp"

namespace convrec {

enum class Provenance { kLlmMatched, kCfNeighbor, kFallback };

std::string_view to_string(Provenance provenance);

struct RankedEntry {
  std::string item_id;
  double score = 0.0;
  Provenance provenance = Provenance::kCfNeighbor;

  bool operator==(const RankedEntry&) const = default;
};

struct ScoredRanking {
  std::vector<RankedEntry> entries;
  std::size_t k = 0;

  bool operator==(const ScoredRanking&) const = default;
};

// Cosine similarity of every row of `queries` with every row of `items`
// (m x |V|). Pairs involving a zero vector score 0.
RowMatrix similarity_matrix(const RowMatrix& queries, const RowMatrix& items);

// Same, for queries that are rows of `embeddings` itself. The entry of a
// query against its own row is exactly 1 (0 for a zero row).
RowMatrix similarity_matrix(const EmbeddingMatrix& embeddings,
                            std::span<const std::size_t> query_rows);

// s(j) = max_i S(i, j). S must have at least one row.
std::vector<double> max_pool_scores(const RowMatrix& similarities);

// Top-k of argsort(-s). Ties: items of `llm_order` first, in that order;
// then ascending item_id. llm_order holds row indices into item_ids.
ScoredRanking rank(std::span<const double> scores, const std::vector<std::string>& item_ids,
                   const std::vector<std::size_t>& llm_order, std::size_t k);

// Items by descending count (ascending id on ties), scores count / max count.
ScoredRanking popularity_ranking(std::span<const double> counts,
                                 const std::vector<std::string>& item_ids, std::size_t k,
                                 Provenance provenance = Provenance::kFallback);

struct RecommendDiagnostics {
  std::size_t n_parsed = 0;
  std::size_t n_unparsed_lines = 0;
  std::size_t n_matched = 0;
  std::size_t n_unmatched = 0;
  std::size_t n_ambiguous = 0;
  std::size_t n_duplicates = 0;
  std::string prompt_hash;
};

struct Recommendation {
  ScoredRanking ranking;
  bool fallback_used = false;
  std::vector<std::string> llm_items;  // I_LLM in LLM order
  RecommendDiagnostics diagnostics;
};

// One pipeline variant: context turns in, ranked catalog out.
class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual std::string_view name() const = 0;
  virtual Recommendation recommend(const std::vector<ConversationTurn>& context,
                                   std::size_t k) const = 0;
};

// Shared state of the LLM-backed pipelines. Candidate set V is the set of
// embedding rows that also exist in the catalog.
struct LlmPipelineParts {
  const Catalog* catalog = nullptr;
  const EmbeddingMatrix* embeddings = nullptr;
  LlmGateway* gateway = nullptr;
  PromptTemplate prompt_template;
  PopularityScores popularity;  // fallback order
};

// prompt -> completion -> parse -> exact match -> cosine -> max-pool -> rank.
// When no LLM title survives matching, the popularity ranking is returned
// with fallback_used set.
class BridgeRecommender final : public Recommender {
 public:
  explicit BridgeRecommender(LlmPipelineParts parts);
  std::string_view name() const override { return "bridge"; }
  Recommendation recommend(const std::vector<ConversationTurn>& context,
                           std::size_t k) const override;

 private:
  friend class LlmOnlyRecommender;
  struct LlmStage {
    std::vector<std::size_t> rows;  // I_LLM as rows of candidate_embeddings_
    RecommendDiagnostics diagnostics;
  };
  LlmStage run_llm(const std::vector<ConversationTurn>& context) const;

  LlmPipelineParts parts_;
  CandidateSet candidates_;
  EmbeddingMatrix candidate_embeddings_;  // rows of V only
  std::vector<double> norms_;
  std::vector<double> popularity_;  // aligned to candidate_embeddings_
};

// The LLM's matched list in its own order, then the popularity order for the
// rest of V. Same prompt and matcher as BridgeRecommender.
class LlmOnlyRecommender final : public Recommender {
 public:
  explicit LlmOnlyRecommender(LlmPipelineParts parts);
  std::string_view name() const override { return "llm-only"; }
  Recommendation recommend(const std::vector<ConversationTurn>& context,
                           std::size_t k) const override;

 private:
  BridgeRecommender bridge_;
};

// next_item_scores of a CF model on the items mentioned in the context.
// Falls back to popularity when the context mentions no known item.
class CfOnlyRecommender final : public Recommender {
 public:
  CfOnlyRecommender(const Model& model, PopularityScores popularity);
  std::string_view name() const override { return "cf-only"; }
  Recommendation recommend(const std::vector<ConversationTurn>& context,
                           std::size_t k) const override;

 private:
  const Model& model_;
  std::vector<double> popularity_;
};

class PopularityRecommender final : public Recommender {
 public:
  explicit PopularityRecommender(PopularityScores popularity);
  std::string_view name() const override { return "pop"; }
  Recommendation recommend(const std::vector<ConversationTurn>& context,
                           std::size_t k) const override;

 private:
  PopularityScores popularity_;
};

// Inputs for make_recommender. Which members are required depends on the
// pipeline: bridge and llm-only need catalog, embeddings and gateway;
// cf-only needs cf_model; pop needs only popularity.
struct PipelineInputs {
  LlmPipelineParts llm;
  const Model* cf_model = nullptr;
};

inline constexpr std::string_view kPipelineNames[] = {"bridge", "llm-only", "cf-only", "pop"};

// Throws UsageError on an unknown name or a missing input.
std::unique_ptr<Recommender> make_recommender(std::string_view pipeline,
                                              const PipelineInputs& inputs);

nlohmann::ordered_json to_json(const ScoredRanking& ranking, const Catalog* catalog = nullptr);

}  // namespace convrec
