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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convrec/config.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embeddings.hpp"
#include "convrec/linker.hpp"
#include "convrec/llm_gateway.hpp"

namespace convrec::testing {

// Synthetic corpus with known cluster structure. Users and conversations
// each belong to one cluster; the cassette answers every recommender turn
// with titles from the conversation's cluster and from one other cluster.
struct PlantedSpec {
  std::size_t n_clusters = 5;
  std::size_t items_per_cluster = 12;
  std::size_t n_users = 200;
  std::size_t min_user_events = 12;
  std::size_t max_user_events = 20;
  double in_cluster_rate = 0.85;
  std::size_t n_conversations = 100;
  std::size_t n_fallback_conversations = 4;    // cassette names unknown titles
  std::size_t n_unevaluable_conversations = 2; // no recommender mention
  std::size_t correct_titles = 2;
  std::size_t wrong_titles = 2;
  std::uint64_t seed = 2026;
};

struct PlantedCorpus {
  Catalog catalog;
  std::vector<std::size_t> cluster_of_item;  // catalog order
  std::vector<InteractionSequence> interactions;
  std::vector<nlohmann::ordered_json> conversations;  // JSONL records
  std::vector<CassetteEntry> cassette;
};

PlantedCorpus make_planted_corpus(const PlantedSpec& spec = {});

// Training setup used for the committed planted embeddings.
TrainingConfig planted_training_config();

// Writes catalog.csv, interactions.csv, conversations.jsonl, cassette.jsonl.
void write_planted_corpus(const PlantedCorpus& corpus, const std::string& dir);

// Replay-mode configuration over the planted files in `dir`, embeddings
// included.
AppConfig planted_app_config(const std::string& dir);

// 50 conversational items against a CF catalog: 30 linked by IMDb id,
// 10 only through the alias table, 5 with two equally good alias matches,
// 5 with nothing to link to (one of them a phase-2 match onto a cf item
// already taken in phase 1).
struct LinkerFixture {
  Catalog conv_catalog;
  Catalog cf_catalog;
  std::vector<InteractionSequence> cf_interactions;
  std::vector<AliasRow> aliases;
  nlohmann::ordered_json answer_key;
};

LinkerFixture make_linker_fixture();

// Writes conv_catalog.csv, cf_catalog.csv, cf_interactions.csv, aliases.csv,
// answer_key.json.
void write_linker_fixture(const LinkerFixture& fixture, const std::string& dir);

// Twelve conversations, nine of them evaluable.
std::vector<nlohmann::ordered_json> small_conversations();

// Titles around which the planted catalog is built; exported so tests can
// name items in natural text.
std::string planted_title(std::size_t cluster, std::size_t index);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace convrec::testing
