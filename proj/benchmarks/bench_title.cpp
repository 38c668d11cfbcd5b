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

#include "convrec/title.hpp"

namespace {

const std::vector<std::string> kTitles = {
    "The Shawshank Redemption (1994)", "Amélie", "Star Wars: Episode IV - A New Hope",
    "  Se7en  ", "Léon: The Professional", "Matrix, The", "Spirited Away (Sen to Chihiro)",
    "Mission: Impossible – Fallout"};

void BM_NormalizeTitle(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) {
    auto out = convrec::normalize_title(kTitles[i++ % kTitles.size()]);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_NormalizeTitle);

}  // namespace
