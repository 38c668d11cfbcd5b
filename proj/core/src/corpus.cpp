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

#include "convrec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "convrec/csv.hpp"
#include "convrec/error.hpp"
#include "convrec/random.hpp"
#include "convrec/title.hpp"

namespace convrec {
namespace {

constexpr std::string_view kSourcePrefix = "source:";

std::string at_line(const std::string& path, std::size_t line) {
  return path + ": line " + std::to_string(line) + ": ";
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

void validate_item(const ItemRecord& item) {
  if (item.item_id.empty()) throw DataError("empty item_id");
  if (item.title.empty()) throw DataError("item '" + item.item_id + "' has an empty title");
  if (item.year && (*item.year < kMinYear || *item.year > kMaxYear)) {
    throw DataError("item '" + item.item_id + "' has year " + std::to_string(*item.year) +
                    " outside [1870, 2100]");
  }
}

const std::vector<std::size_t>& empty_hits() {
  static const std::vector<std::size_t> kEmpty;
  return kEmpty;
}

}  // namespace

Catalog::Catalog(std::vector<ItemRecord> items) : items_(std::move(items)) {
  by_id_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const ItemRecord& item = items_[i];
    validate_item(item);
    if (!by_id_.emplace(item.item_id, i).second) {
      throw DataError("duplicate item_id '" + item.item_id + "'");
    }
    for (const auto& [source, native] : item.source_ids) {
      auto& hits = by_native_[native];
      if (hits.empty() || hits.back() != i) hits.push_back(i);
    }
    const std::string normalized = normalize_title(item.title);
    by_title_[normalized].push_back(i);
    if (item.year) by_title_year_[{normalized, *item.year}].push_back(i);
  }
}

std::optional<std::size_t> Catalog::index_of(std::string_view item_id) const {
  auto it = by_id_.find(std::string(item_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Catalog::resolve(std::string_view native_id) const {
  if (auto direct = index_of(native_id)) return direct;
  auto it = by_native_.find(std::string(native_id));
  if (it == by_native_.end() || it->second.size() != 1) return std::nullopt;
  return it->second.front();
}

const std::vector<std::size_t>& Catalog::find_by_title(std::string_view normalized) const {
  auto it = by_title_.find(std::string(normalized));
  return it == by_title_.end() ? empty_hits() : it->second;
}

const std::vector<std::size_t>& Catalog::find_by_title_year(std::string_view normalized,
                                                            int year) const {
  auto it = by_title_year_.find({std::string(normalized), year});
  return it == by_title_year_.end() ? empty_hits() : it->second;
}

namespace {

Catalog load_catalog_csv(const std::string& path) {
  const auto table = csv::Table::read(path, {"item_id", "title", "year", "imdb_id"});
  const std::size_t id_col = table.column("item_id");
  const std::size_t title_col = table.column("title");
  const std::size_t year_col = table.column("year");
  const std::size_t imdb_col = table.column("imdb_id");

  // Optional "source:<dataset>" columns carry native ids.
  std::vector<std::pair<std::string, std::size_t>> source_cols;
  for (std::size_t i = 0; i < table.header().size(); ++i) {
    std::string_view name = table.header()[i];
    if (name.rfind(kSourcePrefix, 0) == 0) {
      source_cols.emplace_back(std::string(name.substr(kSourcePrefix.size())), i);
    }
  }

  std::vector<ItemRecord> items;
  std::unordered_map<std::string, std::size_t> first_line;
  for (const auto& row : table.rows()) {
    ItemRecord item;
    item.item_id = row.fields[id_col];
    item.title = row.fields[title_col];
    const std::string& year = row.fields[year_col];
    if (!year.empty()) {
      auto parsed = parse_int<int>(year);
      if (!parsed) throw DataError(at_line(path, row.line) + "malformed year '" + year + "'");
      item.year = *parsed;
    }
    if (!row.fields[imdb_col].empty()) item.imdb_id = row.fields[imdb_col];
    for (const auto& [source, col] : source_cols) {
      if (!row.fields[col].empty()) item.source_ids[source] = row.fields[col];
    }
    if (item.item_id.empty()) throw DataError(at_line(path, row.line) + "empty item_id");
    auto [it, inserted] = first_line.emplace(item.item_id, row.line);
    if (!inserted) {
      throw DataError(path + ": duplicate item_id '" + item.item_id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(row.line));
    }
    try {
      validate_item(item);
    } catch (const DataError& e) {
      throw DataError(at_line(path, row.line) + e.what());
    }
    items.push_back(std::move(item));
  }
  return Catalog(std::move(items));
}

Catalog load_catalog_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<ItemRecord> items;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ItemRecord item;
    try {
      const auto record = nlohmann::json::parse(line);
      item.item_id = record.at("item_id").get<std::string>();
      item.title = record.at("title").get<std::string>();
      if (record.contains("year") && !record["year"].is_null()) item.year = record["year"].get<int>();
      if (record.contains("imdb_id") && !record["imdb_id"].is_null()) {
        item.imdb_id = record["imdb_id"].get<std::string>();
      }
      if (record.contains("source_ids")) {
        item.source_ids = record["source_ids"].get<std::map<std::string, std::string>>();
      }
      validate_item(item);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(at_line(path, line_no) + "malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(at_line(path, line_no) + e.what());
    }
    auto [it, inserted] = first_line.emplace(item.item_id, line_no);
    if (!inserted) {
      throw DataError(path + ": duplicate item_id '" + item.item_id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    items.push_back(std::move(item));
  }
  return Catalog(std::move(items));
}

}  // namespace

Catalog load_catalog(const std::string& path, CatalogFormat format) {
  return format == CatalogFormat::kCsv ? load_catalog_csv(path) : load_catalog_jsonl(path);
}

void write_catalog_csv(const Catalog& catalog, const std::string& path) {
  std::set<std::string> sources;
  for (const auto& item : catalog.items()) {
    for (const auto& [source, native] : item.source_ids) sources.insert(source);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "item_id,title,year,imdb_id";
  for (const auto& source : sources) out << ',' << csv::escape(std::string(kSourcePrefix) + source);
  out << '\n';
  for (const auto& item : catalog.items()) {
    out << csv::escape(item.item_id) << ',' << csv::escape(item.title) << ','
        << (item.year ? std::to_string(*item.year) : "") << ','
        << csv::escape(item.imdb_id.value_or(""));
    for (const auto& source : sources) {
      auto it = item.source_ids.find(source);
      out << ',' << (it == item.source_ids.end() ? "" : csv::escape(it->second));
    }
    out << '\n';
  }
}

namespace {

InteractionLoad load_interactions_impl(const std::string& path, const Catalog* catalog,
                                       std::size_t min_seq_len) {
  if (min_seq_len < 1) throw UsageError("min_seq_len must be at least 1");
  const auto table = csv::Table::read(path, {"user_id", "item_id", "timestamp"});
  const std::size_t user_col = table.column("user_id");
  const std::size_t item_col = table.column("item_id");
  const std::size_t ts_col = table.column("timestamp");

  struct Event {
    std::int64_t timestamp;
    std::string item;
  };
  std::map<std::string, std::vector<Event>> by_user;
  InteractionLoad result;
  for (const auto& row : table.rows()) {
    const std::string& ts_text = row.fields[ts_col];
    auto timestamp = parse_int<std::int64_t>(ts_text);
    if (!timestamp) {
      throw DataError(at_line(path, row.line) + "unparseable timestamp '" + ts_text + "'");
    }
    ++result.n_events;
    const std::string& item = row.fields[item_col];
    if (catalog != nullptr && !catalog->contains(item)) {
      ++result.n_unknown_item_events;
      continue;
    }
    by_user[row.fields[user_col]].push_back({*timestamp, item});
  }

  for (auto& [user, events] : by_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    InteractionSequence sequence;
    sequence.user_id = user;
    for (auto& event : events) {
      if (!sequence.items.empty() && sequence.items.back() == event.item) continue;
      sequence.items.push_back(std::move(event.item));
      sequence.timestamps.push_back(event.timestamp);
    }
    if (sequence.items.size() < min_seq_len) {
      ++result.n_short_users;
      continue;
    }
    result.sequences.push_back(std::move(sequence));
  }
  return result;
}

}  // namespace

InteractionLoad load_interactions(const std::string& path, const Catalog& catalog,
                                  std::size_t min_seq_len) {
  return load_interactions_impl(path, &catalog, min_seq_len);
}

InteractionLoad load_interactions(const std::string& path, std::size_t min_seq_len) {
  return load_interactions_impl(path, nullptr, min_seq_len);
}

void write_interactions_csv(const std::vector<InteractionSequence>& sequences,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "user_id,item_id,rating,timestamp\n";
  for (const auto& sequence : sequences) {
    for (std::size_t i = 0; i < sequence.items.size(); ++i) {
      out << csv::escape(sequence.user_id) << ',' << csv::escape(sequence.items[i]) << ",,"
          << sequence.timestamps[i] << '\n';
    }
  }
}

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::kSeeker ? "seeker" : "recommender";
}

std::optional<Speaker> parse_speaker(std::string_view text) {
  if (text == "seeker") return Speaker::kSeeker;
  if (text == "recommender") return Speaker::kRecommender;
  return std::nullopt;
}

bool has_prior_seeker_turn(const Conversation& conversation, std::size_t turn) {
  for (std::size_t i = 0; i < turn && i < conversation.turns.size(); ++i) {
    if (conversation.turns[i].speaker == Speaker::kSeeker) return true;
  }
  return false;
}

std::optional<std::size_t> evaluation_target(const Conversation& conversation) {
  for (std::size_t i = conversation.turns.size(); i > 0; --i) {
    const auto& turn = conversation.turns[i - 1];
    if (turn.speaker == Speaker::kRecommender && !turn.mentioned_items.empty()) {
      return has_prior_seeker_turn(conversation, i - 1) ? std::optional<std::size_t>(i - 1)
                                                        : std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> final_recommender_turn(const Conversation& conversation) {
  for (std::size_t i = conversation.turns.size(); i > 0; --i) {
    if (conversation.turns[i - 1].speaker == Speaker::kRecommender) return i - 1;
  }
  return std::nullopt;
}

std::vector<ConversationTurn> parse_turns(const nlohmann::json& turns, const Catalog& catalog,
                                          std::size_t* n_unresolved) {
  if (!turns.is_array()) throw DataError("'turns' must be an array");
  std::vector<ConversationTurn> out;
  for (std::size_t t = 0; t < turns.size(); ++t) {
    const auto& raw = turns[t];
    const std::string where = "turn " + std::to_string(t) + ": ";
    if (!raw.is_object()) throw DataError(where + "not an object");
    if (!raw.contains("speaker") || !raw["speaker"].is_string()) {
      throw DataError(where + "missing string field 'speaker'");
    }
    auto speaker = parse_speaker(raw["speaker"].get<std::string>());
    if (!speaker) throw DataError(where + "speaker must be 'seeker' or 'recommender'");
    if (!raw.contains("text") || !raw["text"].is_string()) {
      throw DataError(where + "missing string field 'text'");
    }
    ConversationTurn turn;
    turn.speaker = *speaker;
    turn.text = raw["text"].get<std::string>();
    if (raw.contains("user_id")) {
      if (!raw["user_id"].is_string()) throw DataError(where + "'user_id' must be a string");
      turn.user_id = raw["user_id"].get<std::string>();
    }
    if (raw.contains("mentions")) {
      const auto& mentions = raw["mentions"];
      if (!mentions.is_array()) throw DataError(where + "'mentions' must be an array");
      for (const auto& mention : mentions) {
        if (!mention.is_string()) throw DataError(where + "mentions must be strings");
        auto index = catalog.resolve(mention.get<std::string>());
        if (!index) {
          if (n_unresolved != nullptr) ++*n_unresolved;
          continue;
        }
        const std::string& id = catalog.at(*index).item_id;
        if (std::find(turn.mentioned_items.begin(), turn.mentioned_items.end(), id) ==
            turn.mentioned_items.end()) {
          turn.mentioned_items.push_back(id);
        }
      }
    }
    out.push_back(std::move(turn));
  }
  return out;
}

Conversation parse_conversation(const nlohmann::json& record, const Catalog& catalog,
                                std::size_t* n_unresolved) {
  if (!record.is_object()) throw DataError("record is not a JSON object");
  if (!record.contains("conversation_id") || !record["conversation_id"].is_string()) {
    throw DataError("missing string field 'conversation_id'");
  }
  if (!record.contains("turns") || !record["turns"].is_array()) {
    throw DataError("missing array field 'turns'");
  }
  Conversation conversation;
  conversation.conversation_id = record["conversation_id"].get<std::string>();
  const auto& turns = record["turns"];
  if (turns.size() < 2) throw DataError("conversation needs at least 2 turns");

  conversation.turns = parse_turns(turns, catalog, n_unresolved);
  conversation.evaluable = evaluation_target(conversation).has_value();
  return conversation;
}

ConversationLoad load_conversations(const std::string& path, const Catalog& catalog) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  ConversationLoad result;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      std::size_t unresolved = 0;
      Conversation conversation = parse_conversation(record, catalog, &unresolved);
      result.n_unresolved_mentions += unresolved;
      if (!conversation.evaluable) ++result.n_non_evaluable;
      result.conversations.push_back(std::move(conversation));
    } catch (const nlohmann::json::exception& e) {
      result.skipped.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const DataError& e) {
      result.skipped.push_back({line_no, e.what()});
    }
  }
  return result;
}

std::set<UserItemPair> derive_interactions(const std::vector<Conversation>& conversations) {
  std::set<UserItemPair> pairs;
  for (const auto& conversation : conversations) {
    for (const auto& turn : conversation.turns) {
      if (turn.speaker != Speaker::kSeeker) continue;
      for (const auto& item : turn.mentioned_items) pairs.emplace(turn.user_id, item);
    }
  }
  return pairs;
}

std::vector<InteractionSequence> seeker_sequences(const std::vector<Conversation>& conversations) {
  std::map<std::string, InteractionSequence> by_user;
  for (const auto& conversation : conversations) {
    for (const auto& turn : conversation.turns) {
      if (turn.speaker != Speaker::kSeeker) continue;
      for (const auto& item : turn.mentioned_items) {
        auto& sequence = by_user[turn.user_id];
        sequence.user_id = turn.user_id;
        if (!sequence.items.empty() && sequence.items.back() == item) continue;
        sequence.timestamps.push_back(static_cast<std::int64_t>(sequence.items.size()));
        sequence.items.push_back(item);
      }
    }
  }
  std::vector<InteractionSequence> out;
  out.reserve(by_user.size());
  for (auto& [user, sequence] : by_user) out.push_back(std::move(sequence));
  return out;
}

ConversationSplit split_conversations(const std::vector<Conversation>& conversations,
                                      const SplitRatios& ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw UsageError("split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = conversations.size();
  if (n < 3) throw DataError("cannot split fewer than 3 conversations");

  // The epsilon keeps exact products such as 100 * 0.1 from flooring down.
  const auto share = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
  };
  const std::size_t n_valid = share(ratios.valid);
  const std::size_t n_test = share(ratios.test);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<std::size_t> valid(order.begin(), order.begin() + n_valid);
  std::vector<std::size_t> test(order.begin() + n_valid, order.begin() + n_valid + n_test);
  std::vector<std::size_t> train(order.begin() + n_valid + n_test, order.end());
  ConversationSplit split;
  const auto take = [&](std::vector<std::size_t>& indexes, std::vector<Conversation>& out) {
    std::sort(indexes.begin(), indexes.end());
    out.reserve(indexes.size());
    for (std::size_t i : indexes) out.push_back(conversations[i]);
  };
  take(train, split.train);
  take(valid, split.valid);
  take(test, split.test);
  return split;
}

DatasetStats compute_stats(std::uint64_t n_interactions, std::uint64_t n_users,
                           std::uint64_t n_items) {
  DatasetStats stats{n_interactions, n_users, n_items, 0.0};
  if (n_users > 0 && n_items > 0) {
    stats.density = static_cast<double>(n_interactions) /
                    (static_cast<double>(n_users) * static_cast<double>(n_items));
  }
  return stats;
}

DatasetStats compute_stats(const std::vector<InteractionSequence>& sequences,
                           const Catalog& catalog) {
  std::uint64_t events = 0;
  for (const auto& sequence : sequences) events += sequence.items.size();
  return compute_stats(events, sequences.size(), catalog.size());
}

DatasetStats compute_stats(const std::vector<InteractionSequence>& sequences) {
  std::uint64_t events = 0;
  std::set<std::string_view> items;
  for (const auto& sequence : sequences) {
    events += sequence.items.size();
    items.insert(sequence.items.begin(), sequence.items.end());
  }
  return compute_stats(events, sequences.size(), items.size());
}

DatasetStats compute_stats(const std::set<UserItemPair>& interactions, const Catalog& catalog) {
  std::set<std::string_view> users;
  for (const auto& [user, item] : interactions) users.insert(user);
  return compute_stats(interactions.size(), users.size(), catalog.size());
}

nlohmann::ordered_json to_json(const DatasetStats& stats) {
  nlohmann::ordered_json out;
  out["n_interactions"] = stats.n_interactions;
  out["n_users"] = stats.n_users;
  out["n_items"] = stats.n_items;
  out["density"] = stats.density;
  out["density_pct"] = stats.density * 100.0;
  return out;
}

}  // namespace convrec
