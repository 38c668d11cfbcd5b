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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "convrec/ranker.hpp"

namespace {

convrec::EmbeddingMatrix random_embeddings(std::size_t n, std::size_t d) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> normal;
  convrec::RowMatrix vectors(n, d);
  for (Eigen::Index i = 0; i < vectors.size(); ++i) vectors.data()[i] = normal(gen);
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back("item" + std::to_string(i));
  return {std::move(ids), std::move(vectors)};
}

std::vector<std::size_t> query_rows(std::size_t n, std::size_t m) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < m; ++i) rows.push_back((i * 1237) % n);
  return rows;
}

void BM_SimilarityMaxPool(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  const auto embeddings = random_embeddings(n, 64);
  const auto rows = query_rows(n, m);
  for (auto _ : state) {
    auto scores = convrec::max_pool_scores(convrec::similarity_matrix(embeddings, rows));
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * m));
}
BENCHMARK(BM_SimilarityMaxPool)->Args({25000, 20})->Args({25000, 5})->Unit(benchmark::kMillisecond);

void BM_RankEndToEnd(benchmark::State& state) {
  const std::size_t n = 25000;
  const auto embeddings = random_embeddings(n, 64);
  const auto rows = query_rows(n, 20);
  for (auto _ : state) {
    const auto scores = convrec::max_pool_scores(convrec::similarity_matrix(embeddings, rows));
    auto ranking = convrec::rank(scores, embeddings.item_ids(), rows, 10);
    benchmark::DoNotOptimize(ranking.entries.data());
  }
}
BENCHMARK(BM_RankEndToEnd)->Unit(benchmark::kMillisecond);

void BM_PopularityRanking(benchmark::State& state) {
  const std::size_t n = 25000;
  const auto embeddings = random_embeddings(n, 1);
  std::vector<double> counts(n);
  for (std::size_t i = 0; i < n; ++i) counts[i] = static_cast<double>((i * 7919) % 1000);
  for (auto _ : state) {
    auto ranking = convrec::popularity_ranking(counts, embeddings.item_ids(), 10);
    benchmark::DoNotOptimize(ranking.entries.data());
  }
}
BENCHMARK(BM_PopularityRanking)->Unit(benchmark::kMicrosecond);

}  // namespace
