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

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "convrec/corpus.hpp"
#include "convrec/error.hpp"
#include "support/fixtures.hpp"
#include "support/paths.hpp"

namespace convrec {
namespace {

using testing::TempDir;
using testing::write_text;

Catalog catalog_of(std::initializer_list<std::string> ids) {
  std::vector<ItemRecord> items;
  for (const auto& id : ids) items.push_back({id, "Title " + id, 2000, std::nullopt, {}});
  return Catalog(std::move(items));
}

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

TEST(LoadCatalog, ThreeRows) {
  TempDir dir;
  write_text(dir.file("c.csv"),
             "item_id,title,year,imdb_id\n"
             "a,Heat,1995,tt0113277\n"
             "b,\"Matrix, The\",1999,\n"
             "c,Crash,,\n");
  const Catalog catalog = load_catalog(dir.file("c.csv"));
  ASSERT_EQ(catalog.size(), 3u);
  EXPECT_EQ(catalog.at(1).title, "Matrix, The");
  EXPECT_EQ(catalog.at(0).year, 1995);
  EXPECT_FALSE(catalog.at(2).year.has_value());
  EXPECT_EQ(catalog.at(0).imdb_id, "tt0113277");
  EXPECT_FALSE(catalog.at(1).imdb_id.has_value());
  EXPECT_EQ(catalog.index_of("c"), 2u);
  EXPECT_EQ(catalog.find_by_title("heat").size(), 1u);
  EXPECT_EQ(catalog.find_by_title_year("the matrix", 1999).size(), 1u);
  EXPECT_TRUE(catalog.find_by_title_year("the matrix", 1998).empty());
}

TEST(LoadCatalog, HeaderOnlyIsEmpty) {
  TempDir dir;
  write_text(dir.file("c.csv"), "item_id,title,year,imdb_id\n");
  EXPECT_TRUE(load_catalog(dir.file("c.csv")).empty());
}

TEST(LoadCatalog, DuplicateIdNamesBothLines) {
  TempDir dir;
  write_text(dir.file("c.csv"),
             "item_id,title,year,imdb_id\n"
             "x,One,2000,\n"
             "y,Two,2001,\n"
             "z,Three,2002,\n"
             "x,Four,2003,\n");
  const std::string message = error_of([&] { load_catalog(dir.file("c.csv")); });
  EXPECT_NE(message.find("duplicate item_id 'x'"), std::string::npos) << message;
  EXPECT_NE(message.find('2'), std::string::npos) << message;
  EXPECT_NE(message.find('5'), std::string::npos) << message;
}

TEST(LoadCatalog, RejectsBadRows) {
  TempDir dir;
  write_text(dir.file("year.csv"), "item_id,title,year,imdb_id\na,Heat,1492,\n");
  EXPECT_THROW(load_catalog(dir.file("year.csv")), DataError);
  write_text(dir.file("text.csv"), "item_id,title,year,imdb_id\na,Heat,nineteen,\n");
  EXPECT_THROW(load_catalog(dir.file("text.csv")), DataError);
  write_text(dir.file("title.csv"), "item_id,title,year,imdb_id\na,,1995,\n");
  EXPECT_NE(error_of([&] { load_catalog(dir.file("title.csv")); }).find("empty title"),
            std::string::npos);
  write_text(dir.file("cols.csv"), "item_id,name,year\na,Heat,1995\n");
  EXPECT_THROW(load_catalog(dir.file("cols.csv")), DataError);
  EXPECT_THROW(load_catalog(dir.file("missing.csv")), DataError);
}

TEST(LoadCatalog, JsonlWithSourceIds) {
  TempDir dir;
  write_text(dir.file("c.jsonl"),
             R"({"item_id":"a","title":"Heat","year":1995,"source_ids":{"reddit":"r1"}})"
             "\n"
             R"({"item_id":"b","title":"Crash","year":null,"source_ids":{"reddit":"r2"}})"
             "\n");
  const Catalog catalog = load_catalog(dir.file("c.jsonl"), CatalogFormat::kJsonl);
  ASSERT_EQ(catalog.size(), 2u);
  EXPECT_EQ(catalog.resolve("r2"), 1u);
  EXPECT_EQ(catalog.resolve("a"), 0u);
  EXPECT_FALSE(catalog.resolve("r3").has_value());
  EXPECT_FALSE(catalog.at(1).year.has_value());
}

TEST(LoadCatalog, CsvSourceColumnsAndAmbiguousNativeIds) {
  TempDir dir;
  write_text(dir.file("c.csv"),
             "item_id,title,year,imdb_id,source:redial\n"
             "a,Heat,1995,,100\n"
             "b,Crash,1996,,200\n"
             "c,Crash,2004,,200\n");
  const Catalog catalog = load_catalog(dir.file("c.csv"));
  EXPECT_EQ(catalog.resolve("100"), 0u);
  EXPECT_FALSE(catalog.resolve("200").has_value());
  EXPECT_EQ(catalog.at(0).source_ids.at("redial"), "100");
}

TEST(LoadCatalog, CsvRoundTrip) {
  TempDir dir;
  const Catalog original({{"a", "Matrix, The", 1999, "tt0133093", {{"redial", "7"}}},
                          {"b", "Say \"Hi\"", std::nullopt, std::nullopt, {}}});
  write_catalog_csv(original, dir.file("c.csv"));
  const Catalog loaded = load_catalog(dir.file("c.csv"));
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.at(0).title, "Matrix, The");
  EXPECT_EQ(loaded.at(1).title, "Say \"Hi\"");
  EXPECT_EQ(loaded.at(0).imdb_id, "tt0133093");
  EXPECT_EQ(loaded.resolve("7"), 0u);
}

TEST(LoadInteractions, SortsCollapsesAndDrops) {
  TempDir dir;
  write_text(dir.file("i.csv"),
             "user_id,item_id,rating,timestamp\n"
             "A,x,5,3\n"
             "A,y,4,1\n"
             "A,z,3,2\n"
             "B,p,5,10\n"
             "B,p,5,11\n"
             "B,q,5,12\n"
             "C,x,5,1\n"
             "B,ghost,5,13\n");
  const Catalog catalog = catalog_of({"x", "y", "z", "p", "q"});
  const InteractionLoad load = load_interactions(dir.file("i.csv"), catalog, 2);
  ASSERT_EQ(load.sequences.size(), 2u);
  EXPECT_EQ(load.sequences[0].user_id, "A");
  EXPECT_EQ(load.sequences[0].items, (std::vector<std::string>{"y", "z", "x"}));
  EXPECT_EQ(load.sequences[1].user_id, "B");
  EXPECT_EQ(load.sequences[1].items, (std::vector<std::string>{"p", "q"}));
  EXPECT_EQ(load.n_unknown_item_events, 1u);
  EXPECT_EQ(load.n_short_users, 1u);

  const InteractionLoad all = load_interactions(dir.file("i.csv"), catalog, 1);
  EXPECT_EQ(all.sequences.size(), 3u);
}

TEST(LoadInteractions, StableOnTiesAndNoCatalog) {
  TempDir dir;
  write_text(dir.file("i.csv"),
             "user_id,item_id,rating,timestamp\n"
             "u,b,1,5\n"
             "u,a,1,5\n"
             "u,c,1,4\n");
  const InteractionLoad load = load_interactions(dir.file("i.csv"));
  ASSERT_EQ(load.sequences.size(), 1u);
  EXPECT_EQ(load.sequences[0].items, (std::vector<std::string>{"c", "b", "a"}));
}

TEST(LoadInteractions, BadTimestamp) {
  TempDir dir;
  write_text(dir.file("i.csv"), "user_id,item_id,rating,timestamp\nu,a,1,yesterday\n");
  EXPECT_NE(error_of([&] { load_interactions(dir.file("i.csv")); }).find("timestamp"),
            std::string::npos);
  EXPECT_THROW(load_interactions(dir.file("nope.csv")), DataError);
}

TEST(LoadInteractions, PlantedSequencesAreWellFormed) {
  const Catalog catalog = load_catalog(testing::fixture_path("planted/catalog.csv"));
  const InteractionLoad load =
      load_interactions(testing::fixture_path("planted/interactions.csv"), catalog);
  ASSERT_FALSE(load.sequences.empty());
  for (const auto& sequence : load.sequences) {
    ASSERT_EQ(sequence.items.size(), sequence.timestamps.size());
    for (std::size_t i = 1; i < sequence.items.size(); ++i) {
      EXPECT_LE(sequence.timestamps[i - 1], sequence.timestamps[i]);
      EXPECT_NE(sequence.items[i - 1], sequence.items[i]);
    }
  }
  EXPECT_TRUE(std::is_sorted(load.sequences.begin(), load.sequences.end(),
                             [](const auto& a, const auto& b) { return a.user_id < b.user_id; }));
}

TEST(LoadConversations, FinalTurnGroundTruth) {
  const Catalog catalog = catalog_of({"x", "y"});
  const auto record = nlohmann::json::parse(
      R"({"conversation_id":"c1","turns":[)"
      R"({"speaker":"seeker","user_id":"u","text":"hi","mentions":["x"]},)"
      R"({"speaker":"recommender","user_id":"r","text":"try y","mentions":["y"]}]})");
  const Conversation conversation = parse_conversation(record, catalog);
  EXPECT_TRUE(conversation.evaluable);
  ASSERT_EQ(evaluation_target(conversation), 1u);
  EXPECT_EQ(conversation.turns[1].mentioned_items, (std::vector<std::string>{"y"}));
}

TEST(LoadConversations, UnknownMentionFlagsConversation) {
  const Catalog catalog = catalog_of({"x"});
  const auto record = nlohmann::json::parse(
      R"({"conversation_id":"c1","turns":[)"
      R"({"speaker":"seeker","user_id":"u","text":"hi","mentions":["x"]},)"
      R"({"speaker":"recommender","user_id":"r","text":"try q","mentions":["q"]}]})");
  std::size_t unresolved = 0;
  const Conversation conversation = parse_conversation(record, catalog, &unresolved);
  EXPECT_EQ(unresolved, 1u);
  EXPECT_FALSE(conversation.evaluable);
  EXPECT_TRUE(conversation.turns[1].mentioned_items.empty());
  EXPECT_EQ(conversation.turns.size(), 2u);
}

TEST(LoadConversations, TargetNeedsPriorSeekerTurn) {
  const Catalog catalog = catalog_of({"x"});
  const auto record = nlohmann::json::parse(
      R"({"conversation_id":"c1","turns":[)"
      R"({"speaker":"recommender","text":"try x","mentions":["x"]},)"
      R"({"speaker":"seeker","text":"thanks"}]})");
  EXPECT_FALSE(parse_conversation(record, catalog).evaluable);
}

TEST(LoadConversations, MalformedRecordsAreSkipped) {
  TempDir dir;
  std::string text;
  const std::string good_turns =
      R"([{"speaker":"seeker","user_id":"u","text":"hi","mentions":["x"]},)"
      R"({"speaker":"recommender","text":"try y","mentions":["y"]}])";
  for (int i = 0; i < 10; ++i) {
    if (i == 3) {
      text += "{not json\n";
    } else if (i == 7) {
      text += R"({"conversation_id":"c7","turns":[{"speaker":"bot","text":"?"},)"
              R"({"speaker":"seeker","text":"?"}]})"
              "\n";
    } else {
      text += R"({"conversation_id":"c)" + std::to_string(i) + R"(","turns":)" + good_turns +
              "}\n";
    }
  }
  write_text(dir.file("c.jsonl"), text);
  const ConversationLoad load = load_conversations(dir.file("c.jsonl"), catalog_of({"x", "y"}));
  EXPECT_EQ(load.conversations.size(), 8u);
  ASSERT_EQ(load.skipped.size(), 2u);
  EXPECT_EQ(load.skipped[0].line, 4u);
  EXPECT_EQ(load.skipped[1].line, 8u);
  EXPECT_EQ(load.n_non_evaluable, 0u);
}

TEST(LoadConversations, SmallFixture) {
  const ConversationLoad load =
      load_conversations(testing::fixture_path("conversations_small.jsonl"),
                         load_catalog(testing::fixture_path("planted/catalog.csv")));
  EXPECT_EQ(load.conversations.size(), 12u);
  EXPECT_TRUE(load.skipped.empty());
  EXPECT_EQ(load.n_non_evaluable, 3u);
}

Conversation make_conversation(std::vector<ConversationTurn> turns) {
  Conversation conversation;
  conversation.conversation_id = "c";
  conversation.turns = std::move(turns);
  conversation.evaluable = evaluation_target(conversation).has_value();
  return conversation;
}

TEST(DeriveInteractions, SeekerMentionsOnly) {
  const auto conversation = make_conversation(
      {{Speaker::kSeeker, "u", "x", {"x"}}, {Speaker::kRecommender, "r", "y", {"y"}}});
  EXPECT_EQ(derive_interactions({conversation}), (std::set<UserItemPair>{{"u", "x"}}));
}

TEST(DeriveInteractions, EmptyAndDeduplicated) {
  const auto silent =
      make_conversation({{Speaker::kSeeker, "u", "hi", {}}, {Speaker::kRecommender, "r", "?", {}}});
  EXPECT_TRUE(derive_interactions({silent}).empty());
  const auto twice = make_conversation({{Speaker::kSeeker, "u", "x", {"x"}},
                                        {Speaker::kRecommender, "r", "?", {}},
                                        {Speaker::kSeeker, "u", "x again", {"x"}}});
  EXPECT_EQ(derive_interactions({twice}).size(), 1u);
}

TEST(DeriveInteractions, SubsetOfSeekersTimesCatalog) {
  const Catalog catalog = load_catalog(testing::fixture_path("planted/catalog.csv"));
  const auto load =
      load_conversations(testing::fixture_path("planted/conversations.jsonl"), catalog);
  std::set<std::string> seekers;
  for (const auto& conversation : load.conversations) {
    for (const auto& turn : conversation.turns) {
      if (turn.speaker == Speaker::kSeeker) seekers.insert(turn.user_id);
    }
  }
  const auto pairs = derive_interactions(load.conversations);
  EXPECT_FALSE(pairs.empty());
  for (const auto& [user, item] : pairs) {
    EXPECT_TRUE(seekers.count(user)) << user;
    EXPECT_TRUE(catalog.contains(item)) << item;
  }
}

TEST(SeekerSequences, OrdinalTimestamps) {
  const auto conversation = make_conversation({{Speaker::kSeeker, "u", "", {"a", "b"}},
                                               {Speaker::kRecommender, "r", "", {"c"}},
                                               {Speaker::kSeeker, "u", "", {"b", "d"}}});
  const auto sequences = seeker_sequences({conversation});
  ASSERT_EQ(sequences.size(), 1u);
  EXPECT_EQ(sequences[0].items, (std::vector<std::string>{"a", "b", "d"}));
  EXPECT_EQ(sequences[0].timestamps, (std::vector<std::int64_t>{0, 1, 2}));
}

std::vector<Conversation> numbered(std::size_t n) {
  std::vector<Conversation> out;
  for (std::size_t i = 0; i < n; ++i) {
    Conversation conversation;
    conversation.conversation_id = "c" + std::to_string(i);
    out.push_back(conversation);
  }
  return out;
}

std::vector<std::string> ids(const std::vector<Conversation>& conversations) {
  std::vector<std::string> out;
  for (const auto& conversation : conversations) out.push_back(conversation.conversation_id);
  return out;
}

TEST(SplitConversations, Sizes) {
  const auto ten = split_conversations(numbered(10), {}, 7);
  EXPECT_EQ(ten.train.size(), 8u);
  EXPECT_EQ(ten.valid.size(), 1u);
  EXPECT_EQ(ten.test.size(), 1u);
  const auto hundred = split_conversations(numbered(100), {}, 7);
  EXPECT_EQ(hundred.train.size(), 80u);
  EXPECT_EQ(hundred.valid.size(), 10u);
  EXPECT_EQ(hundred.test.size(), 10u);
  const auto odd = split_conversations(numbered(19), {}, 7);
  EXPECT_EQ(odd.train.size(), 17u);
}

TEST(SplitConversations, DeterministicDisjointPartition) {
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    const auto input = numbered(57);
    const auto a = split_conversations(input, {}, seed);
    const auto b = split_conversations(input, {}, seed);
    EXPECT_EQ(ids(a.train), ids(b.train));
    EXPECT_EQ(ids(a.valid), ids(b.valid));
    EXPECT_EQ(ids(a.test), ids(b.test));
    std::multiset<std::string> all;
    for (const auto* part : {&a.train, &a.valid, &a.test}) {
      for (const auto& id : ids(*part)) all.insert(id);
    }
    const auto expected = ids(input);
    EXPECT_EQ(all, std::multiset<std::string>(expected.begin(), expected.end()));
  }
  EXPECT_NE(ids(split_conversations(numbered(57), {}, 1).test),
            ids(split_conversations(numbered(57), {}, 2).test));
}

TEST(SplitConversations, Errors) {
  EXPECT_THROW(split_conversations(numbered(2), {}, 7), DataError);
  EXPECT_THROW(split_conversations(numbered(10), {0.5, 0.1, 0.1}, 7), UsageError);
  EXPECT_THROW(split_conversations(numbered(10), {1.2, -0.1, -0.1}, 7), UsageError);
}

TEST(ComputeStats, TableRows) {
  const DatasetStats reddit = compute_stats(51148, 12508, 31396);
  EXPECT_NEAR(reddit.density, 0.00013, 0.00013 * 0.05);
  const DatasetStats joined = compute_stats(30074259, 200947, 22014);
  EXPECT_NEAR(joined.density, 0.0068, 0.0068 * 0.05);
}

TEST(ComputeStats, EdgeCases) {
  EXPECT_DOUBLE_EQ(compute_stats(1, 1, 1).density, 1.0);
  EXPECT_DOUBLE_EQ(compute_stats(5, 0, 3).density, 0.0);
  EXPECT_DOUBLE_EQ(compute_stats(5, 3, 0).density, 0.0);
}

TEST(ComputeStats, FromSequencesAndPairs) {
  const std::vector<InteractionSequence> sequences = {{"u1", {"a", "b"}, {1, 2}},
                                                      {"u2", {"b"}, {1}}};
  const DatasetStats distinct = compute_stats(sequences);
  EXPECT_EQ(distinct.n_interactions, 3u);
  EXPECT_EQ(distinct.n_users, 2u);
  EXPECT_EQ(distinct.n_items, 2u);
  EXPECT_DOUBLE_EQ(distinct.density, 0.75);
  EXPECT_EQ(compute_stats(sequences, catalog_of({"a", "b", "c", "d"})).n_items, 4u);

  const std::set<UserItemPair> pairs = {{"u", "a"}, {"u", "b"}, {"v", "a"}};
  const DatasetStats from_pairs = compute_stats(pairs, catalog_of({"a", "b"}));
  EXPECT_EQ(from_pairs.n_users, 2u);
  EXPECT_DOUBLE_EQ(from_pairs.density, 0.75);
  EXPECT_TRUE(to_json(from_pairs).contains("density"));
}

}  // namespace
}  // namespace convrec
