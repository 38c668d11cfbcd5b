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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/corpus.hpp"

namespace convrec {

// Lowercases, strips a leading "tt" and zero-pads to 7 digits. Returns
// nothing unless the remainder is 1 to 8 ASCII digits.
std::optional<std::string> normalize_imdb_id(std::string_view raw);

struct LinkRow {
  std::string native_id;
  std::string imdb_id;  // normalized
};

// native_id -> IMDb id for one dataset. Native ids are unique.
struct LinkTable {
  std::vector<LinkRow> rows;
};

// CSV header native_id,imdb_id.
LinkTable load_link_table(const std::string& path);
// Validates and normalizes in-memory rows.
LinkTable make_link_table(const std::vector<std::pair<std::string, std::string>>& rows);
// Rows from the catalog's imdb_id column; items without one are skipped.
LinkTable link_table_from_catalog(const Catalog& catalog);

struct AliasRow {
  std::string old_imdb_id;
  std::string current_imdb_id;
  std::string title;
  std::string release_date;  // YYYY-MM-DD
  int year = 0;
};

// Offline snapshot of historical IMDb ids. old_imdb_id is unique.
struct AliasTable {
  std::vector<AliasRow> rows;
};

// CSV header old_imdb_id,current_imdb_id,title,release_date.
AliasTable load_alias_table(const std::string& path);
AliasTable make_alias_table(std::vector<AliasRow> rows);

// An identifier claimed by more than one item, so no side gets it.
struct LinkCollision {
  std::string imdb_id;
  std::string side;  // "conv" or "cf"
  std::vector<std::string> native_ids;
};

struct Phase1Result {
  std::map<std::string, std::string> mapping;  // conv id -> cf id
  std::vector<std::string> unresolved;         // conv table order
  std::vector<LinkCollision> collisions;
};

// Exact join on normalized IMDb ids. Shared ids on either side are collisions
// and leave the affected conversational items unresolved.
Phase1Result link_phase1(const LinkTable& conv_links, const LinkTable& cf_links);

struct LinkCandidate {
  std::string native_id;
  std::string title;
  std::optional<int> year;
};

struct LinkAmbiguity {
  std::string native_id;
  std::string reason;
  std::vector<std::string> candidates;
};

struct Phase2Result {
  std::map<std::string, std::string> mapping;
  std::vector<std::string> unresolved;
  std::vector<LinkAmbiguity> ambiguities;
};

// Title + release-year match against the alias table, joined to the cf side
// through current_imdb_id. cf items already taken in `taken` (phase 1) are
// never reassigned.
Phase2Result link_phase2(const std::vector<LinkCandidate>& unresolved,
                         const AliasTable& aliases, const LinkTable& cf_links,
                         const std::map<std::string, std::string>& taken);

enum class LinkPhase { kPhase1 = 1, kPhase2 = 2 };

struct LinkResult {
  std::map<std::string, std::string> mapping;  // conv item id -> cf item id
  std::map<std::string, LinkPhase> phase;
  std::vector<std::string> unresolved;         // conv catalog order
  std::vector<LinkCollision> collisions;
  std::vector<LinkAmbiguity> ambiguities;

  std::size_t count(LinkPhase p) const;
};

// Runs both phases over every item of the conversational catalog. Items
// without a conv link row go straight to phase 2.
LinkResult link_catalogs(const Catalog& conv_catalog, const LinkTable& conv_links,
                         const LinkTable& cf_links, const AliasTable& aliases);

struct LinkOptions {
  bool drop_unlinked = false;
  std::size_t unresolved_sample_size = 20;
};

struct LinkReport {
  std::size_t n_phase1_matches = 0;
  std::size_t n_phase2_matches = 0;
  std::size_t n_unresolved = 0;
  DatasetStats merged_stats;
  std::vector<std::string> unresolved_sample;
  std::vector<LinkCollision> collisions;
  std::vector<LinkAmbiguity> ambiguities;
};

struct LinkedDataset {
  Catalog catalog;
  std::vector<InteractionSequence> sequences;
  LinkReport report;
};

// Merged catalog: conversational items under their own ids (with "conv" and,
// when linked, "cf" source ids), then unlinked cf items unless dropped. cf
// sequences are re-keyed to merged ids; `conv_sequences` (seeker mentions)
// are appended with a "conv:" user prefix. Throws DataError when the mapping
// names ids absent from either catalog.
LinkedDataset build_linked_dataset(const Catalog& conv_catalog, const Catalog& cf_catalog,
                                   const std::vector<InteractionSequence>& cf_sequences,
                                   const LinkResult& link,
                                   const std::vector<InteractionSequence>& conv_sequences = {},
                                   const LinkOptions& options = {});

nlohmann::ordered_json to_json(const LinkReport& report);

}  // namespace convrec
