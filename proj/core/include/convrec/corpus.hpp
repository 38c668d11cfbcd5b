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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace convrec {

inline constexpr int kMinYear = 1870;
inline constexpr int kMaxYear = 2100;

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::optional<int> year;
  std::optional<std::string> imdb_id;
  // origin dataset name -> native id in that dataset
  std::map<std::string, std::string> source_ids;
};

// Ordered, immutable item collection with id, native-id and title indexes.
class Catalog {
 public:
  Catalog() = default;
  // Throws DataError on duplicate ids, empty titles or out-of-range years.
  explicit Catalog(std::vector<ItemRecord> items);

  const std::vector<ItemRecord>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const ItemRecord& at(std::size_t index) const { return items_.at(index); }

  std::optional<std::size_t> index_of(std::string_view item_id) const;
  const ItemRecord* find_by_id(std::string_view item_id) const {
    auto index = index_of(item_id);
    return index ? &items_[*index] : nullptr;
  }
  bool contains(std::string_view item_id) const {
    return index_of(item_id).has_value();
  }

  // Resolves a mention: first as an item_id, then as a native source id.
  // A native id claimed by several items resolves to nothing.
  std::optional<std::size_t> resolve(std::string_view native_id) const;

  // Lookups on normalize_title() output.
  const std::vector<std::size_t>& find_by_title(std::string_view normalized) const;
  const std::vector<std::size_t>& find_by_title_year(std::string_view normalized,
                                                     int year) const;

 private:
  std::vector<ItemRecord> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_native_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_title_;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> by_title_year_;
};

enum class CatalogFormat { kCsv, kJsonl };

// CSV header: item_id,title,year,imdb_id. JSONL objects carry the same keys
// plus an optional "source_ids" object.
Catalog load_catalog(const std::string& path, CatalogFormat format = CatalogFormat::kCsv);
void write_catalog_csv(const Catalog& catalog, const std::string& path);

struct InteractionSequence {
  std::string user_id;
  std::vector<std::string> items;
  std::vector<std::int64_t> timestamps;
};

struct InteractionLoad {
  std::vector<InteractionSequence> sequences;  // ascending user_id
  std::size_t n_events = 0;
  std::size_t n_unknown_item_events = 0;
  std::size_t n_short_users = 0;
};

// Reads user_id,item_id,rating,timestamp. Events are grouped per user,
// stably sorted by timestamp and consecutive repeats of an item collapsed.
// With a catalog, events on unknown items are dropped and counted.
InteractionLoad load_interactions(const std::string& path, const Catalog& catalog,
                                  std::size_t min_seq_len = 1);
InteractionLoad load_interactions(const std::string& path, std::size_t min_seq_len = 1);
void write_interactions_csv(const std::vector<InteractionSequence>& sequences,
                            const std::string& path);

enum class Speaker { kSeeker, kRecommender };

std::string_view to_string(Speaker speaker);
std::optional<Speaker> parse_speaker(std::string_view text);

struct ConversationTurn {
  Speaker speaker = Speaker::kSeeker;
  std::string user_id;
  std::string text;
  std::vector<std::string> mentioned_items;  // resolved catalog ids
};

struct Conversation {
  std::string conversation_id;
  std::vector<ConversationTurn> turns;
  // True when evaluation_target() finds a turn.
  bool evaluable = false;
};

struct SkipReport {
  std::size_t line = 0;
  std::string message;
};

struct ConversationLoad {
  std::vector<Conversation> conversations;
  std::vector<SkipReport> skipped;
  std::size_t n_unresolved_mentions = 0;
  std::size_t n_non_evaluable = 0;
};

ConversationLoad load_conversations(const std::string& path, const Catalog& catalog);

// Turn objects {speaker, text, user_id?, mentions?}; mentions go through
// Catalog::resolve and unresolved ones are counted, not fatal.
std::vector<ConversationTurn> parse_turns(const nlohmann::json& turns, const Catalog& catalog,
                                          std::size_t* n_unresolved);

// Parses one JSONL record; throws DataError describing the defect.
Conversation parse_conversation(const nlohmann::json& record, const Catalog& catalog,
                                std::size_t* n_unresolved = nullptr);

// Index of the last recommender turn, if any.
std::optional<std::size_t> final_recommender_turn(const Conversation& conversation);

bool has_prior_seeker_turn(const Conversation& conversation, std::size_t turn);

// The last recommender turn with at least one resolved mention, provided
// some seeker turn precedes it.
std::optional<std::size_t> evaluation_target(const Conversation& conversation);

using UserItemPair = std::pair<std::string, std::string>;

// Pairs (seeker user, item) for every item a seeker turn mentions.
std::set<UserItemPair> derive_interactions(const std::vector<Conversation>& conversations);

// Seeker mentions as sequences, conversations in input order and turns in
// order; the timestamp is the running mention ordinal.
std::vector<InteractionSequence> seeker_sequences(const std::vector<Conversation>& conversations);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct ConversationSplit {
  std::vector<Conversation> train;
  std::vector<Conversation> valid;
  std::vector<Conversation> test;
};

// Seeded random partition of whole conversations. valid and test get
// floor(n * ratio) conversations, train gets the rest. Each part keeps input
// order.
ConversationSplit split_conversations(const std::vector<Conversation>& conversations,
                                      const SplitRatios& ratios, std::uint64_t seed);

struct DatasetStats {
  std::uint64_t n_interactions = 0;
  std::uint64_t n_users = 0;
  std::uint64_t n_items = 0;
  double density = 0.0;
};

// density = interactions / (users * items); 0 when either count is 0.
DatasetStats compute_stats(std::uint64_t n_interactions, std::uint64_t n_users,
                           std::uint64_t n_items);
// Items counted from the catalog.
DatasetStats compute_stats(const std::vector<InteractionSequence>& sequences,
                           const Catalog& catalog);
// Items counted as distinct ids appearing in the sequences.
DatasetStats compute_stats(const std::vector<InteractionSequence>& sequences);
DatasetStats compute_stats(const std::set<UserItemPair>& interactions, const Catalog& catalog);

nlohmann::ordered_json to_json(const DatasetStats& stats);

}  // namespace convrec
