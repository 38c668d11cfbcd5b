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

#include "convrec/linker.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "convrec/csv.hpp"
#include "convrec/error.hpp"
#include "convrec/title.hpp"

namespace convrec {

std::optional<std::string> normalize_imdb_id(std::string_view raw) {
  std::string id;
  for (char c : raw) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      id.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (id.rfind("tt", 0) == 0) id.erase(0, 2);
  if (id.empty() || id.size() > 8) return std::nullopt;
  if (!std::all_of(id.begin(), id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  if (id.size() < 7) id.insert(0, 7 - id.size(), '0');
  return id;
}

namespace {

LinkTable build_link_table(const std::vector<std::pair<std::string, std::string>>& rows,
                           const std::vector<std::size_t>& lines, const std::string& where) {
  LinkTable table;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string prefix =
        where + (lines.empty() ? "row " + std::to_string(i) : "line " + std::to_string(lines[i])) +
        ": ";
    const auto& [native, raw_imdb] = rows[i];
    if (native.empty()) throw DataError(prefix + "empty native_id");
    auto imdb = normalize_imdb_id(raw_imdb);
    if (!imdb) throw DataError(prefix + "invalid imdb id '" + raw_imdb + "'");
    if (!seen.insert(native).second) throw DataError(prefix + "duplicate native_id '" + native + "'");
    table.rows.push_back({native, *imdb});
  }
  return table;
}

bool parse_iso_date(std::string_view date, int& year) {
  if (date.size() != 10 || date[4] != '-' || date[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (date[i] < '0' || date[i] > '9') return false;
  }
  const auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (date[i] - '0');
    return v;
  };
  const int month = num(5, 2);
  const int day = num(8, 2);
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  year = num(0, 4);
  return true;
}

}  // namespace

LinkTable load_link_table(const std::string& path) {
  const auto table = csv::Table::read(path, {"native_id", "imdb_id"});
  const std::size_t native_col = table.column("native_id");
  const std::size_t imdb_col = table.column("imdb_id");
  std::vector<std::pair<std::string, std::string>> rows;
  std::vector<std::size_t> lines;
  for (const auto& row : table.rows()) {
    rows.emplace_back(row.fields[native_col], row.fields[imdb_col]);
    lines.push_back(row.line);
  }
  return build_link_table(rows, lines, path + ": ");
}

LinkTable make_link_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  return build_link_table(rows, {}, "link table ");
}

LinkTable link_table_from_catalog(const Catalog& catalog) {
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& item : catalog.items()) {
    if (item.imdb_id) rows.emplace_back(item.item_id, *item.imdb_id);
  }
  return build_link_table(rows, {}, "catalog imdb_id ");
}

AliasTable make_alias_table(std::vector<AliasRow> rows) {
  AliasTable table;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    AliasRow row = std::move(rows[i]);
    const std::string prefix = "alias row " + std::to_string(i) + ": ";
    auto old_id = normalize_imdb_id(row.old_imdb_id);
    auto current_id = normalize_imdb_id(row.current_imdb_id);
    if (!old_id) throw DataError(prefix + "invalid old_imdb_id '" + row.old_imdb_id + "'");
    if (!current_id) {
      throw DataError(prefix + "invalid current_imdb_id '" + row.current_imdb_id + "'");
    }
    if (!parse_iso_date(row.release_date, row.year)) {
      throw DataError(prefix + "release_date '" + row.release_date + "' is not YYYY-MM-DD");
    }
    if (row.title.empty()) throw DataError(prefix + "empty title");
    if (!seen.insert(*old_id).second) throw DataError(prefix + "duplicate old_imdb_id " + *old_id);
    row.old_imdb_id = *old_id;
    row.current_imdb_id = *current_id;
    table.rows.push_back(std::move(row));
  }
  return table;
}

AliasTable load_alias_table(const std::string& path) {
  const auto table =
      csv::Table::read(path, {"old_imdb_id", "current_imdb_id", "title", "release_date"});
  const std::size_t old_col = table.column("old_imdb_id");
  const std::size_t cur_col = table.column("current_imdb_id");
  const std::size_t title_col = table.column("title");
  const std::size_t date_col = table.column("release_date");
  std::vector<AliasRow> rows;
  for (const auto& row : table.rows()) {
    rows.push_back({row.fields[old_col], row.fields[cur_col], row.fields[title_col],
                    row.fields[date_col], 0});
  }
  try {
    return make_alias_table(std::move(rows));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

namespace {

std::unordered_map<std::string, std::vector<std::string>> group_by_imdb(const LinkTable& table) {
  std::unordered_map<std::string, std::vector<std::string>> grouped;
  for (const auto& row : table.rows) grouped[row.imdb_id].push_back(row.native_id);
  return grouped;
}

}  // namespace

Phase1Result link_phase1(const LinkTable& conv_links, const LinkTable& cf_links) {
  const auto conv_by_imdb = group_by_imdb(conv_links);
  const auto cf_by_imdb = group_by_imdb(cf_links);
  Phase1Result result;
  std::set<std::pair<std::string, std::string>> reported;  // (side, imdb)

  for (const auto& row : conv_links.rows) {
    const auto& conv_group = conv_by_imdb.at(row.imdb_id);
    auto cf_it = cf_by_imdb.find(row.imdb_id);
    if (conv_group.size() > 1) {
      if (reported.emplace("conv", row.imdb_id).second) {
        result.collisions.push_back({row.imdb_id, "conv", conv_group});
      }
      result.unresolved.push_back(row.native_id);
    } else if (cf_it == cf_by_imdb.end()) {
      result.unresolved.push_back(row.native_id);
    } else if (cf_it->second.size() > 1) {
      if (reported.emplace("cf", row.imdb_id).second) {
        result.collisions.push_back({row.imdb_id, "cf", cf_it->second});
      }
      result.unresolved.push_back(row.native_id);
    } else {
      result.mapping.emplace(row.native_id, cf_it->second.front());
    }
  }
  return result;
}

Phase2Result link_phase2(const std::vector<LinkCandidate>& unresolved,
                         const AliasTable& aliases, const LinkTable& cf_links,
                         const std::map<std::string, std::string>& taken) {
  std::map<std::pair<std::string, int>, std::vector<const AliasRow*>> alias_index;
  for (const auto& row : aliases.rows) {
    alias_index[{normalize_title(row.title), row.year}].push_back(&row);
  }
  const auto cf_by_imdb = group_by_imdb(cf_links);
  std::unordered_set<std::string> taken_cf;
  for (const auto& [conv, cf] : taken) taken_cf.insert(cf);

  Phase2Result result;
  std::vector<std::pair<std::string, std::string>> proposals;  // conv -> cf, input order
  for (const auto& candidate : unresolved) {
    if (!candidate.year || candidate.title.empty()) {
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    auto it = alias_index.find({normalize_title(candidate.title), *candidate.year});
    if (it == alias_index.end()) {
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    std::vector<std::string> current_ids;
    for (const AliasRow* row : it->second) {
      if (std::find(current_ids.begin(), current_ids.end(), row->current_imdb_id) ==
          current_ids.end()) {
        current_ids.push_back(row->current_imdb_id);
      }
    }
    if (current_ids.size() > 1) {
      result.ambiguities.push_back({candidate.native_id, "multiple alias rows", current_ids});
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    auto cf_it = cf_by_imdb.find(current_ids.front());
    if (cf_it == cf_by_imdb.end()) {
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    if (cf_it->second.size() > 1) {
      result.ambiguities.push_back({candidate.native_id, "current id shared by cf items",
                                    cf_it->second});
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    const std::string& cf_id = cf_it->second.front();
    if (taken_cf.contains(cf_id)) {
      result.ambiguities.push_back({candidate.native_id, "cf item already linked in phase 1",
                                    {cf_id}});
      result.unresolved.push_back(candidate.native_id);
      continue;
    }
    proposals.emplace_back(candidate.native_id, cf_id);
  }

  // Keep the mapping injective: a cf item proposed twice goes to nobody.
  std::map<std::string, std::vector<std::string>> by_cf;
  for (const auto& [conv, cf] : proposals) by_cf[cf].push_back(conv);
  for (const auto& [conv, cf] : proposals) {
    const auto& claimants = by_cf.at(cf);
    if (claimants.size() == 1) {
      result.mapping.emplace(conv, cf);
    } else {
      result.unresolved.push_back(conv);
      if (claimants.front() == conv) {
        result.ambiguities.push_back({cf, "cf item matched by several conv items", claimants});
      }
    }
  }
  return result;
}

std::size_t LinkResult::count(LinkPhase p) const {
  return static_cast<std::size_t>(std::count_if(
      phase.begin(), phase.end(), [p](const auto& entry) { return entry.second == p; }));
}

LinkResult link_catalogs(const Catalog& conv_catalog, const LinkTable& conv_links,
                         const LinkTable& cf_links, const AliasTable& aliases) {
  LinkTable scoped;
  for (const auto& row : conv_links.rows) {
    if (conv_catalog.contains(row.native_id)) scoped.rows.push_back(row);
  }
  Phase1Result phase1 = link_phase1(scoped, cf_links);

  std::vector<LinkCandidate> candidates;
  for (const auto& item : conv_catalog.items()) {
    if (!phase1.mapping.contains(item.item_id)) {
      candidates.push_back({item.item_id, item.title, item.year});
    }
  }
  Phase2Result phase2 = link_phase2(candidates, aliases, cf_links, phase1.mapping);

  LinkResult result;
  result.collisions = std::move(phase1.collisions);
  result.ambiguities = std::move(phase2.ambiguities);
  for (const auto& [conv, cf] : phase1.mapping) {
    result.mapping.emplace(conv, cf);
    result.phase.emplace(conv, LinkPhase::kPhase1);
  }
  for (const auto& [conv, cf] : phase2.mapping) {
    result.mapping.emplace(conv, cf);
    result.phase.emplace(conv, LinkPhase::kPhase2);
  }
  for (const auto& item : conv_catalog.items()) {
    if (!result.mapping.contains(item.item_id)) result.unresolved.push_back(item.item_id);
  }
  return result;
}

LinkedDataset build_linked_dataset(const Catalog& conv_catalog, const Catalog& cf_catalog,
                                   const std::vector<InteractionSequence>& cf_sequences,
                                   const LinkResult& link,
                                   const std::vector<InteractionSequence>& conv_sequences,
                                   const LinkOptions& options) {
  std::unordered_map<std::string, std::string> cf_to_merged;
  for (const auto& [conv, cf] : link.mapping) {
    if (!conv_catalog.contains(conv)) {
      throw DataError("link mapping names unknown conversational item '" + conv + "'");
    }
    if (!cf_catalog.contains(cf)) {
      throw DataError("link mapping names unknown cf item '" + cf + "'");
    }
    if (!cf_to_merged.emplace(cf, conv).second) {
      throw DataError("link mapping is not injective at cf item '" + cf + "'");
    }
  }

  std::vector<ItemRecord> merged;
  merged.reserve(conv_catalog.size() + cf_catalog.size());
  for (const auto& item : conv_catalog.items()) {
    ItemRecord record = item;
    record.source_ids["conv"] = item.item_id;
    if (auto it = link.mapping.find(item.item_id); it != link.mapping.end()) {
      const ItemRecord& cf_item = *cf_catalog.find_by_id(it->second);
      record.source_ids["cf"] = cf_item.item_id;
      if (!record.imdb_id) record.imdb_id = cf_item.imdb_id;
      if (!record.year) record.year = cf_item.year;
    }
    merged.push_back(std::move(record));
  }
  if (!options.drop_unlinked) {
    for (const auto& item : cf_catalog.items()) {
      if (cf_to_merged.contains(item.item_id)) continue;
      ItemRecord record = item;
      record.source_ids = {{"cf", item.item_id}};
      if (conv_catalog.contains(item.item_id)) record.item_id = "cf:" + item.item_id;
      cf_to_merged.emplace(item.item_id, record.item_id);
      merged.push_back(std::move(record));
    }
  }

  LinkedDataset dataset;
  for (const auto& sequence : cf_sequences) {
    InteractionSequence rekeyed;
    rekeyed.user_id = sequence.user_id;
    for (std::size_t i = 0; i < sequence.items.size(); ++i) {
      auto it = cf_to_merged.find(sequence.items[i]);
      if (it == cf_to_merged.end()) continue;
      if (!rekeyed.items.empty() && rekeyed.items.back() == it->second) continue;
      rekeyed.items.push_back(it->second);
      rekeyed.timestamps.push_back(sequence.timestamps[i]);
    }
    if (!rekeyed.items.empty()) dataset.sequences.push_back(std::move(rekeyed));
  }
  for (const auto& sequence : conv_sequences) {
    InteractionSequence prefixed = sequence;
    prefixed.user_id = "conv:" + sequence.user_id;
    for (const auto& item : prefixed.items) {
      if (!conv_catalog.contains(item)) {
        throw DataError("conversation sequence names unknown item '" + item + "'");
      }
    }
    if (!prefixed.items.empty()) dataset.sequences.push_back(std::move(prefixed));
  }

  dataset.catalog = Catalog(std::move(merged));
  LinkReport& report = dataset.report;
  report.n_phase1_matches = link.count(LinkPhase::kPhase1);
  report.n_phase2_matches = link.count(LinkPhase::kPhase2);
  report.n_unresolved = link.unresolved.size();
  report.merged_stats = compute_stats(dataset.sequences, dataset.catalog);
  for (std::size_t i = 0; i < link.unresolved.size() && i < options.unresolved_sample_size; ++i) {
    report.unresolved_sample.push_back(link.unresolved[i]);
  }
  report.collisions = link.collisions;
  report.ambiguities = link.ambiguities;
  return dataset;
}

nlohmann::ordered_json to_json(const LinkReport& report) {
  nlohmann::ordered_json out;
  out["n_phase1_matches"] = report.n_phase1_matches;
  out["n_phase2_matches"] = report.n_phase2_matches;
  out["n_unresolved"] = report.n_unresolved;
  out["merged_stats"] = to_json(report.merged_stats);
  out["unresolved_sample"] = report.unresolved_sample;
  auto& collisions = out["collisions"] = nlohmann::ordered_json::array();
  for (const auto& c : report.collisions) {
    collisions.push_back({{"imdb_id", c.imdb_id}, {"side", c.side}, {"native_ids", c.native_ids}});
  }
  auto& ambiguities = out["ambiguities"] = nlohmann::ordered_json::array();
  for (const auto& a : report.ambiguities) {
    ambiguities.push_back(
        {{"native_id", a.native_id}, {"reason", a.reason}, {"candidates", a.candidates}});
  }
  return out;
}

}  // namespace convrec
