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
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/corpus.hpp"
#include "convrec/llm_gateway.hpp"
#include "convrec/title.hpp"

namespace convrec {

using CandidateSet = std::unordered_set<std::string>;

struct MatchedItem {
  std::string item_id;
  std::size_t position = 0;  // position of the rec in the LLM output
};

struct AmbiguousMatch {
  std::string title;
  std::optional<int> year;
  std::vector<std::string> candidates;
};

// matched is the ordered I_LLM. Every parsed rec lands in exactly one of
// matched, unmatched, ambiguous or the duplicate count.
struct MatchResult {
  std::vector<MatchedItem> matched;
  std::vector<ParsedRecommendation> unmatched;  // includes hits outside the candidate set
  std::vector<AmbiguousMatch> ambiguous;
  std::size_t n_duplicates = 0;
  std::size_t n_out_of_candidates = 0;
};

// Exact matching on normalized titles. A rec with a year needs exactly one
// catalog hit on (title, year); without a year, exactly one hit on the title.
// Several hits make the rec ambiguous and it is dropped. Hits outside
// `candidates` are dropped (pass nullptr to accept the whole catalog). A
// repeated rec or a rec resolving to an already matched item counts as a
// duplicate.
MatchResult match_items(const std::vector<ParsedRecommendation>& recs, const Catalog& catalog,
                        const CandidateSet* candidates);

// Per-conversation counts with a few samples of each failure kind.
nlohmann::ordered_json diagnostics_json(const MatchResult& result, std::size_t n_samples = 5);

}  // namespace convrec
