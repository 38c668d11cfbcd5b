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

#include "convrec/matcher.hpp"

#include <set>

namespace convrec {

MatchResult match_items(const std::vector<ParsedRecommendation>& recs, const Catalog& catalog,
                        const CandidateSet* candidates) {
  MatchResult result;
  std::set<std::pair<std::string, int>> seen_keys;  // year -1 when absent
  std::unordered_set<std::string> matched_ids;

  for (const auto& rec : recs) {
    const std::string normalized = normalize_title(rec.title);
    if (!seen_keys.emplace(normalized, rec.year.value_or(-1)).second) {
      ++result.n_duplicates;
      continue;
    }
    const auto& hits = rec.year ? catalog.find_by_title_year(normalized, *rec.year)
                                : catalog.find_by_title(normalized);
    if (hits.empty()) {
      result.unmatched.push_back(rec);
      continue;
    }
    if (hits.size() > 1) {
      AmbiguousMatch ambiguous{rec.title, rec.year, {}};
      for (std::size_t index : hits) ambiguous.candidates.push_back(catalog.at(index).item_id);
      result.ambiguous.push_back(std::move(ambiguous));
      continue;
    }
    const std::string& item_id = catalog.at(hits.front()).item_id;
    if (candidates != nullptr && !candidates->contains(item_id)) {
      ++result.n_out_of_candidates;
      result.unmatched.push_back(rec);
      continue;
    }
    if (!matched_ids.insert(item_id).second) {
      ++result.n_duplicates;
      continue;
    }
    result.matched.push_back({item_id, rec.position});
  }
  return result;
}

nlohmann::ordered_json diagnostics_json(const MatchResult& result, std::size_t n_samples) {
  nlohmann::ordered_json out;
  out["n_matched"] = result.matched.size();
  out["n_unmatched"] = result.unmatched.size();
  out["n_ambiguous"] = result.ambiguous.size();
  out["n_duplicates"] = result.n_duplicates;
  out["n_out_of_candidates"] = result.n_out_of_candidates;
  auto& unmatched = out["unmatched_sample"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.unmatched.size() && i < n_samples; ++i) {
    unmatched.push_back(result.unmatched[i].raw_line);
  }
  auto& ambiguous = out["ambiguous_sample"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.ambiguous.size() && i < n_samples; ++i) {
    ambiguous.push_back({{"title", result.ambiguous[i].title},
                         {"candidates", result.ambiguous[i].candidates}});
  }
  return out;
}

}  // namespace convrec
