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

#include "convrec/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "convrec/error.hpp"

namespace convrec {

namespace {

constexpr std::size_t kNotLlm = std::numeric_limits<std::size_t>::max();

double row_norm(const double* row, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t c = 0; c < dim; ++c) sum += row[c] * row[c];
  return std::sqrt(sum);
}

double cosine(const double* a, const double* b, std::size_t dim, double norm_a, double norm_b) {
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t c = 0; c < dim; ++c) dot += a[c] * b[c];
  return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

std::vector<double> norms_of(const RowMatrix& m) {
  std::vector<double> norms(static_cast<std::size_t>(m.rows()));
  const auto dim = static_cast<std::size_t>(m.cols());
  for (std::size_t r = 0; r < norms.size(); ++r) norms[r] = row_norm(m.data() + r * dim, dim);
  return norms;
}

std::vector<double> align_counts(const PopularityScores& popularity,
                                 const std::vector<std::string>& item_ids) {
  std::vector<double> counts(item_ids.size());
  for (std::size_t i = 0; i < item_ids.size(); ++i) counts[i] = popularity.count_of(item_ids[i]);
  return counts;
}

Recommendation fallback(std::span<const double> counts, const std::vector<std::string>& ids,
                        std::size_t k, RecommendDiagnostics diagnostics) {
  Recommendation out;
  out.ranking = popularity_ranking(counts, ids, k);
  out.fallback_used = true;
  out.diagnostics = std::move(diagnostics);
  return out;
}

}  // namespace

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::kLlmMatched:
      return "llm_matched";
    case Provenance::kCfNeighbor:
      return "cf_neighbor";
    case Provenance::kFallback:
      return "fallback";
  }
  return "unknown";
}

RowMatrix similarity_matrix(const RowMatrix& queries, const RowMatrix& items) {
  if (queries.rows() == 0) throw DataError("similarity_matrix: no query vectors");
  if (queries.cols() != items.cols()) {
    throw DataError("similarity_matrix: dimension mismatch (" + std::to_string(queries.cols()) +
                    " vs " + std::to_string(items.cols()) + ")");
  }
  const auto dim = static_cast<std::size_t>(items.cols());
  const auto qn = norms_of(queries);
  const auto vn = norms_of(items);
  RowMatrix s(queries.rows(), items.rows());
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const double* q = queries.data() + i * dim;
    for (Eigen::Index j = 0; j < items.rows(); ++j) {
      s(i, j) = cosine(q, items.data() + j * dim, dim, qn[i], vn[j]);
    }
  }
  return s;
}

RowMatrix similarity_matrix(const EmbeddingMatrix& embeddings,
                            std::span<const std::size_t> query_rows) {
  if (query_rows.empty()) throw DataError("similarity_matrix: no query vectors");
  const auto& v = embeddings.vectors();
  const auto dim = embeddings.dim();
  const auto norms = norms_of(v);
  RowMatrix s(static_cast<Eigen::Index>(query_rows.size()), v.rows());
  for (std::size_t i = 0; i < query_rows.size(); ++i) {
    const std::size_t qi = query_rows[i];
    if (qi >= embeddings.size()) throw DataError("similarity_matrix: query row out of range");
    const double* q = v.data() + qi * dim;
    for (std::size_t j = 0; j < embeddings.size(); ++j) {
      s(i, j) = j == qi ? (norms[j] == 0.0 ? 0.0 : 1.0)
                        : cosine(q, v.data() + j * dim, dim, norms[qi], norms[j]);
    }
  }
  return s;
}

std::vector<double> max_pool_scores(const RowMatrix& similarities) {
  if (similarities.rows() == 0) throw DataError("max_pool_scores: empty similarity matrix");
  std::vector<double> s(static_cast<std::size_t>(similarities.cols()));
  for (Eigen::Index j = 0; j < similarities.cols(); ++j) {
    s[j] = similarities.col(j).maxCoeff();
  }
  return s;
}

ScoredRanking rank(std::span<const double> scores, const std::vector<std::string>& item_ids,
                   const std::vector<std::size_t>& llm_order, std::size_t k) {
  if (scores.size() != item_ids.size()) {
    throw DataError("rank: " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(item_ids.size()) + " items");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("rank: non-finite score");
  }
  std::vector<std::size_t> llm_pos(item_ids.size(), kNotLlm);
  for (std::size_t p = 0; p < llm_order.size(); ++p) {
    const std::size_t row = llm_order[p];
    if (row >= item_ids.size()) throw DataError("rank: LLM item row out of range");
    if (llm_pos[row] == kNotLlm) llm_pos[row] = p;
  }

  std::vector<std::size_t> order(item_ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(k, order.size());
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (llm_pos[a] != llm_pos[b]) return llm_pos[a] < llm_pos[b];
    return item_ids[a] < item_ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    before);

  ScoredRanking out;
  out.k = k;
  out.entries.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    out.entries.push_back({item_ids[j], scores[j],
                           llm_pos[j] == kNotLlm ? Provenance::kCfNeighbor
                                                 : Provenance::kLlmMatched});
  }
  return out;
}

ScoredRanking popularity_ranking(std::span<const double> counts,
                                 const std::vector<std::string>& item_ids, std::size_t k,
                                 Provenance provenance) {
  if (counts.size() != item_ids.size()) throw DataError("popularity_ranking: size mismatch");
  double top = 0.0;
  for (double c : counts) top = std::max(top, c);
  std::vector<double> scores(counts.begin(), counts.end());
  if (top > 0.0) {
    for (double& s : scores) s /= top;
  }
  auto ranking = rank(scores, item_ids, {}, k);
  for (auto& e : ranking.entries) e.provenance = provenance;
  return ranking;
}

BridgeRecommender::BridgeRecommender(LlmPipelineParts parts) : parts_(std::move(parts)) {
  if (parts_.catalog == nullptr || parts_.embeddings == nullptr || parts_.gateway == nullptr) {
    throw UsageError("recommender needs a catalog, embeddings and a gateway");
  }
  parts_.prompt_template.validate();
  const auto& emb = *parts_.embeddings;
  std::vector<std::string> ids;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    if (parts_.catalog->contains(emb.item_ids()[i])) {
      ids.push_back(emb.item_ids()[i]);
      rows.push_back(i);
    }
  }
  if (ids.empty()) throw DataError("no embedding row matches a catalog item");
  RowMatrix v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(emb.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) v.row(r) = emb.vectors().row(rows[r]);
  candidates_.insert(ids.begin(), ids.end());
  candidate_embeddings_ = EmbeddingMatrix(std::move(ids), std::move(v));
  norms_ = norms_of(candidate_embeddings_.vectors());
  popularity_ = align_counts(parts_.popularity, candidate_embeddings_.item_ids());
}

BridgeRecommender::LlmStage BridgeRecommender::run_llm(
    const std::vector<ConversationTurn>& context) const {
  LlmStage stage;
  const std::string prompt = build_prompt(context, parts_.prompt_template);
  stage.diagnostics.prompt_hash = prompt_hash(prompt);
  const std::string reply = parts_.gateway->complete(prompt);
  const auto parsed = parse_recommendations(reply, parts_.prompt_template.n_candidates);
  const auto matched = match_items(parsed.recommendations, *parts_.catalog, &candidates_);
  auto& d = stage.diagnostics;
  d.n_parsed = parsed.recommendations.size();
  d.n_unparsed_lines = parsed.n_unparsed_lines;
  d.n_matched = matched.matched.size();
  d.n_unmatched = matched.unmatched.size();
  d.n_ambiguous = matched.ambiguous.size();
  d.n_duplicates = matched.n_duplicates;
  for (const auto& m : matched.matched) {
    stage.rows.push_back(*candidate_embeddings_.index_of(m.item_id));
  }
  return stage;
}

Recommendation BridgeRecommender::recommend(const std::vector<ConversationTurn>& context,
                                            std::size_t k) const {
  auto stage = run_llm(context);
  const auto& ids = candidate_embeddings_.item_ids();
  if (stage.rows.empty()) return fallback(popularity_, ids, k, std::move(stage.diagnostics));

  // Max-pooled cosine without materializing S; same arithmetic as
  // similarity_matrix(embeddings, rows).
  const auto& v = candidate_embeddings_.vectors();
  const std::size_t dim = candidate_embeddings_.dim();
  std::vector<double> scores(ids.size(), -1.0);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const double* e = v.data() + j * dim;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t qi : stage.rows) {
      const double s = qi == j ? (norms_[j] == 0.0 ? 0.0 : 1.0)
                               : cosine(v.data() + qi * dim, e, dim, norms_[qi], norms_[j]);
      best = std::max(best, s);
    }
    scores[j] = best;
  }

  Recommendation out;
  out.ranking = rank(scores, ids, stage.rows, k);
  for (std::size_t r : stage.rows) out.llm_items.push_back(ids[r]);
  out.diagnostics = std::move(stage.diagnostics);
  return out;
}

LlmOnlyRecommender::LlmOnlyRecommender(LlmPipelineParts parts) : bridge_(std::move(parts)) {}

Recommendation LlmOnlyRecommender::recommend(const std::vector<ConversationTurn>& context,
                                             std::size_t k) const {
  auto stage = bridge_.run_llm(context);
  const auto& ids = bridge_.candidate_embeddings_.item_ids();
  if (stage.rows.empty()) {
    return fallback(bridge_.popularity_, ids, k, std::move(stage.diagnostics));
  }
  Recommendation out;
  out.ranking.k = k;
  std::unordered_set<std::size_t> used;
  for (std::size_t r : stage.rows) {
    out.llm_items.push_back(ids[r]);
    if (out.ranking.entries.size() < k && used.insert(r).second) {
      out.ranking.entries.push_back({ids[r], 1.0, Provenance::kLlmMatched});
    }
  }
  if (out.ranking.entries.size() < k) {
    const auto rest = popularity_ranking(bridge_.popularity_, ids, ids.size());
    for (const auto& e : rest.entries) {
      if (out.ranking.entries.size() >= k) break;
      if (!used.count(*bridge_.candidate_embeddings_.index_of(e.item_id))) {
        out.ranking.entries.push_back(e);
      }
    }
  }
  out.diagnostics = std::move(stage.diagnostics);
  return out;
}

CfOnlyRecommender::CfOnlyRecommender(const Model& model, PopularityScores popularity)
    : model_(model), popularity_(align_counts(popularity, model.item_ids())) {}

Recommendation CfOnlyRecommender::recommend(const std::vector<ConversationTurn>& context,
                                            std::size_t k) const {
  const auto& ids = model_.item_ids();
  std::unordered_set<std::string_view> known(ids.begin(), ids.end());
  std::vector<std::string> prefix;
  for (const auto& turn : context) {
    for (const auto& item : turn.mentioned_items) {
      if (known.count(item) && (prefix.empty() || prefix.back() != item)) prefix.push_back(item);
    }
  }
  if (prefix.empty()) return fallback(popularity_, ids, k, {});
  Recommendation out;
  out.ranking = rank(model_.next_item_scores(prefix), ids, {}, k);
  return out;
}

PopularityRecommender::PopularityRecommender(PopularityScores popularity)
    : popularity_(std::move(popularity)) {}

Recommendation PopularityRecommender::recommend(const std::vector<ConversationTurn>&,
                                                std::size_t k) const {
  Recommendation out;
  out.ranking = popularity_ranking(popularity_.counts, popularity_.item_ids, k);
  return out;
}

std::unique_ptr<Recommender> make_recommender(std::string_view pipeline,
                                              const PipelineInputs& inputs) {
  if (pipeline == "bridge") return std::make_unique<BridgeRecommender>(inputs.llm);
  if (pipeline == "llm-only") return std::make_unique<LlmOnlyRecommender>(inputs.llm);
  if (pipeline == "cf-only") {
    if (inputs.cf_model == nullptr) throw UsageError("pipeline cf-only needs a trained model");
    return std::make_unique<CfOnlyRecommender>(*inputs.cf_model, inputs.llm.popularity);
  }
  if (pipeline == "pop") return std::make_unique<PopularityRecommender>(inputs.llm.popularity);
  throw UsageError("unknown pipeline '" + std::string(pipeline) +
                   "' (expected bridge, llm-only, cf-only or pop)");
}

nlohmann::ordered_json to_json(const ScoredRanking& ranking, const Catalog* catalog) {
  nlohmann::ordered_json out;
  out["k"] = ranking.k;
  auto entries = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
    const auto& e = ranking.entries[r];
    nlohmann::ordered_json item;
    item["rank"] = r + 1;
    item["item_id"] = e.item_id;
    if (catalog != nullptr) {
      if (const auto* rec = catalog->find_by_id(e.item_id)) {
        item["title"] = rec->title;
        item["year"] = rec->year ? nlohmann::ordered_json(*rec->year) : nlohmann::ordered_json();
      }
    }
    item["score"] = e.score;
    item["provenance"] = to_string(e.provenance);
    entries.push_back(std::move(item));
  }
  out["entries"] = std::move(entries);
  return out;
}

}  // namespace convrec
