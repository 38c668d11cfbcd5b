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

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "convrec/evaluator.hpp"

namespace {

std::vector<std::string> ranking_of(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back("item" + std::to_string(i));
  return ids;
}

void BM_HitAtK(benchmark::State& state) {
  const auto ranking = ranking_of(50);
  const std::vector<std::string> truth = {"item47", "missing"};
  for (auto _ : state) benchmark::DoNotOptimize(convrec::hit_at_k(ranking, truth, 50));
}
BENCHMARK(BM_HitAtK);

void BM_NdcgAtK(benchmark::State& state) {
  const auto ranking = ranking_of(50);
  const std::vector<std::string> truth = {"item3", "item29", "missing"};
  for (auto _ : state) benchmark::DoNotOptimize(convrec::ndcg_at_k(ranking, truth, 50));
}
BENCHMARK(BM_NdcgAtK);

}  // namespace
