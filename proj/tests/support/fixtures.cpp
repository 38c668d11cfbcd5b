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

#include "fixtures.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "convrec/random.hpp"

namespace convrec::testing {

namespace {

using Json = nlohmann::ordered_json;

const std::vector<std::vector<std::string>>& cluster_nouns() {
  static const std::vector<std::vector<std::string>> nouns = {
      {"Orbit", "Nebula", "Comet", "Pulsar", "Quasar", "Eclipse", "Meteor", "Zenith", "Starship",
       "Voyager", "Singularity", "Asteroid"},
      {"Canyon", "Outlaw", "Stagecoach", "Sheriff", "Mesa", "Tumbleweed", "Ranch", "Posse",
       "Frontier", "Saloon", "Rustler", "Prairie"},
      {"Sonnet", "Promise", "Letter", "Garden", "Waltz", "Rosebud", "Valentine", "Wedding",
       "Serenade", "Kiss", "Honeymoon", "Blossom"},
      {"Crypt", "Haunting", "Shadow", "Coffin", "Phantom", "Wraith", "Cellar", "Ritual",
       "Banshee", "Gravedigger", "Nightmare", "Poltergeist"},
      {"Vault", "Heist", "Getaway", "Safecracker", "Diamond", "Caper", "Score", "Alibi",
       "Casino", "Ransom", "Jackpot", "Double-Cross"},
  };
  return nouns;
}

int planted_year(std::size_t cluster, std::size_t index) {
  return 1970 + static_cast<int>(cluster * 7 + index);
}

std::string padded(std::size_t value, int width) {
  std::string s = std::to_string(value);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))),
                     '0') +
         s;
}

// One list line as an LLM might phrase it; the variants exercise the parser
// and title normalization.
std::string llm_line(std::size_t rank, const ItemRecord& item, std::size_t variant) {
  const std::string year = item.year ? " (" + std::to_string(*item.year) + ")" : "";
  std::string title = item.title;
  switch (variant % 4) {
    case 1:
      return std::to_string(rank) + ". **" + title + "**" + year;
    case 2:
      return std::to_string(rank) + ". " + title + year + " - a great match";
    case 3:
      if (title.rfind("The ", 0) == 0) title = title.substr(4) + ", The";
      return std::to_string(rank) + ") " + title + year;
    default:
      return std::to_string(rank) + ". " + title + year;
  }
}

std::vector<ConversationTurn> to_turns(const Json& turns) {
  std::vector<ConversationTurn> out;
  for (const auto& t : turns) {
    ConversationTurn turn;
    turn.speaker = *parse_speaker(t["speaker"].get<std::string>());
    turn.text = t["text"].get<std::string>();
    out.push_back(std::move(turn));
  }
  return out;
}

Json turn(std::string_view speaker, const std::string& user, const std::string& text,
          const std::vector<std::string>& mentions) {
  Json t;
  t["speaker"] = speaker;
  t["user_id"] = user;
  t["text"] = text;
  t["mentions"] = mentions;
  return t;
}

std::string describe(const ItemRecord& item) {
  return item.title + (item.year ? " (" + std::to_string(*item.year) + ")" : "");
}

}  // namespace

std::string planted_title(std::size_t cluster, std::size_t index) {
  const auto& noun = cluster_nouns().at(cluster % cluster_nouns().size()).at(index % 12);
  const std::string base = cluster >= cluster_nouns().size()
                               ? noun + " " + std::to_string(cluster)
                               : noun;
  switch (index % 3) {
    case 0:
      return "The " + base;
    case 1:
      return base + " Rising";
    default:
      return "Return of the " + base;
  }
}

PlantedCorpus make_planted_corpus(const PlantedSpec& spec) {
  if (spec.items_per_cluster > 12 || spec.n_clusters < 2) {
    throw std::invalid_argument("planted spec supports 2+ clusters of at most 12 items");
  }
  PlantedCorpus corpus;
  Rng rng(spec.seed);

  std::vector<ItemRecord> items;
  std::vector<std::vector<std::size_t>> members(spec.n_clusters);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    for (std::size_t i = 0; i < spec.items_per_cluster; ++i) {
      const std::size_t index = items.size();
      ItemRecord item;
      item.item_id = "m" + padded(index + 1, 3);
      item.title = planted_title(c, i);
      item.year = planted_year(c, i);
      item.imdb_id = padded(1000000 + index + 1, 7);
      items.push_back(std::move(item));
      members[c].push_back(index);
      corpus.cluster_of_item.push_back(c);
    }
  }
  corpus.catalog = Catalog(items);
  const std::size_t n_items = items.size();

  for (std::size_t u = 0; u < spec.n_users; ++u) {
    const std::size_t cluster = u % spec.n_clusters;
    InteractionSequence seq;
    seq.user_id = "u" + padded(u + 1, 3);
    const std::size_t length =
        spec.min_user_events + rng.index(spec.max_user_events - spec.min_user_events + 1);
    std::int64_t ts = 1'600'000'000 + static_cast<std::int64_t>(u) * 100'000;
    std::string previous;
    while (seq.items.size() < length) {
      const std::size_t item = rng.uniform() < spec.in_cluster_rate
                                   ? members[cluster][rng.index(members[cluster].size())]
                                   : rng.index(n_items);
      if (items[item].item_id == previous) continue;
      previous = items[item].item_id;
      seq.items.push_back(previous);
      seq.timestamps.push_back(ts);
      ts += 60 + static_cast<std::int64_t>(rng.index(600));
    }
    corpus.interactions.push_back(std::move(seq));
  }

  auto add_cassette = [&](const Json& context, const std::string& response) {
    const auto hash = prompt_hash(build_prompt(to_turns(context), PromptTemplate{}));
    for (const auto& e : corpus.cassette) {
      if (e.hash == hash) throw std::runtime_error("planted corpus: duplicate prompt");
    }
    corpus.cassette.push_back({hash, "gpt-3.5-turbo", response});
  };

  auto answer = [&](std::size_t cluster, const std::vector<std::size_t>& exclude,
                    std::size_t variant_seed) {
    std::vector<std::size_t> correct;
    for (std::size_t m : members[cluster]) {
      if (std::find(exclude.begin(), exclude.end(), m) == exclude.end()) correct.push_back(m);
    }
    rng.shuffle(correct);
    const std::size_t other = (cluster + 1 + rng.index(spec.n_clusters - 1)) % spec.n_clusters;
    std::vector<std::size_t> wrong = members[other];
    rng.shuffle(wrong);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < std::max(spec.correct_titles, spec.wrong_titles); ++i) {
      if (i < spec.correct_titles) order.push_back(correct[i]);
      if (i < spec.wrong_titles) order.push_back(wrong[i]);
    }
    std::string text = "Here are some movies you may enjoy:\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
      text += llm_line(r + 1, items[order[r]], variant_seed + r) + "\n";
    }
    return text;
  };

  std::set<std::string> openings;
  for (std::size_t k = 0; k < spec.n_conversations; ++k) {
    const std::size_t cluster = rng.index(spec.n_clusters);
    const std::string seeker = "s" + padded(k + 1, 3);
    const std::string recommender = "r" + padded(k + 1, 3);
    auto pool = members[cluster];
    rng.shuffle(pool);
    const std::size_t seed_item = pool[0];
    const std::size_t truth = pool[1];
    const std::size_t earlier = pool[2];

    Json conv;
    conv["conversation_id"] = "c" + padded(k + 1, 3);
    Json turns = Json::array();
    // Rephrase until the opening prompt is new, so every conversation gets
    // its own cassette entry.
    static const std::vector<std::string> kWhen = {"last night", "over the weekend",
                                                   "on a flight", "with my family",
                                                   "for the second time", "at a friend's place",
                                                   "on a rainy evening"};
    static const std::vector<std::string> kAsk = {"Any suggestions?", "What should I watch next?",
                                                  "Got anything similar?",
                                                  "Can you recommend more like it?",
                                                  "What else would I like?"};
    const std::size_t start = rng.index(kWhen.size() * kAsk.size());
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kWhen.size() * kAsk.size()) {
        throw std::runtime_error("planted corpus: ran out of distinct openings");
      }
      const std::size_t v = (start + attempt) % (kWhen.size() * kAsk.size());
      Json opening = Json::array({turn("seeker", seeker,
                                       "Hi! I watched " + describe(items[seed_item]) + " " +
                                           kWhen[v % kWhen.size()] + " and loved it. " +
                                           kAsk[v / kWhen.size()],
                                       {items[seed_item].item_id})});
      const auto hash = prompt_hash(build_prompt(to_turns(opening), PromptTemplate{}));
      if (openings.insert(hash).second) {
        turns = std::move(opening);
        break;
      }
    }

    const bool unevaluable = k >= spec.n_conversations - spec.n_unevaluable_conversations;
    const bool fallback = !unevaluable && k >= spec.n_conversations -
                                                   spec.n_unevaluable_conversations -
                                                   spec.n_fallback_conversations;
    if (unevaluable) {
      turns.push_back(turn("recommender", recommender,
                           "Sorry, nothing comes to mind right now.", {}));
      conv["turns"] = std::move(turns);
      corpus.conversations.push_back(std::move(conv));
      continue;
    }

    if (k % 3 == 0) {
      add_cassette(turns, answer(cluster, {seed_item, earlier}, k));
      turns.push_back(turn("recommender", recommender,
                           "Have you seen " + describe(items[earlier]) + "?",
                           {items[earlier].item_id}));
      turns.push_back(turn("seeker", seeker, "Yes, I have. Something else maybe?", {}));
    }
    if (fallback) {
      add_cassette(turns,
                   "1. The Unmade Picture (1951)\n2. Nowhere Reel (1952)\n"
                   "3. A Film That Never Was (1953)\n4. Phantom Premiere (1954)\n");
    } else {
      add_cassette(turns, answer(cluster, {seed_item, truth}, k + 1));
    }
    turns.push_back(turn("recommender", recommender,
                         "You should try " + describe(items[truth]) + ".",
                         {items[truth].item_id}));
    conv["turns"] = std::move(turns);
    corpus.conversations.push_back(std::move(conv));
  }
  return corpus;
}

TrainingConfig planted_training_config() {
  TrainingConfig config;
  config.backbone = Backbone::kSasMini;
  config.dim = 16;
  config.epochs = 30;
  config.learning_rate = 0.05;
  config.max_seq_len = 20;
  config.seed = 7;
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_planted_corpus(const PlantedCorpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_catalog_csv(corpus.catalog, dir + "/catalog.csv");
  write_interactions_csv(corpus.interactions, dir + "/interactions.csv");
  std::string conversations;
  for (const auto& c : corpus.conversations) conversations += c.dump() + "\n";
  write_text(dir + "/conversations.jsonl", conversations);
  std::string cassette;
  for (const auto& e : corpus.cassette) {
    Json line;
    line["hash"] = e.hash;
    line["model"] = e.model;
    line["response"] = e.response;
    cassette += line.dump() + "\n";
  }
  write_text(dir + "/cassette.jsonl", cassette);
}

LinkerFixture make_linker_fixture() {
  LinkerFixture f;
  std::vector<ItemRecord> cf;
  auto cf_imdb = [](std::size_t i) { return padded(2000000 + i, 7); };
  for (std::size_t i = 1; i <= 60; ++i) {
    ItemRecord item;
    item.item_id = "cf" + padded(i, 3);
    item.title = planted_title((i - 1) / 12, (i - 1) % 12);
    item.year = 1990 + static_cast<int>(i);
    item.imdb_id = cf_imdb(i);
    cf.push_back(std::move(item));
  }
  // Ambiguous pairs share a title and year across cf041..045 / cf046..050.
  for (std::size_t i = 41; i <= 45; ++i) {
    cf[i - 1].title = "Twin Feature " + std::to_string(i);
    cf[i - 1 + 5].title = "Twin Feature " + std::to_string(i);
    cf[i - 1 + 5].year = cf[i - 1].year;
  }
  f.cf_catalog = Catalog(cf);

  std::vector<ItemRecord> conv;
  Json mapping = Json::object();
  Json phase = Json::object();
  std::vector<std::string> ambiguous, unresolved;
  for (std::size_t i = 1; i <= 50; ++i) {
    ItemRecord item;
    item.item_id = "r" + padded(i, 2);
    const auto& target = cf[i - 1];
    item.title = target.title;
    item.year = target.year;
    if (i <= 30) {
      item.imdb_id = "tt" + cf_imdb(i);
      mapping[item.item_id] = target.item_id;
      phase[item.item_id] = 1;
    } else if (i <= 40) {
      // Retired id plus a differently formatted title.
      item.imdb_id = padded(9000000 + i, 7);
      if (item.title.rfind("The ", 0) == 0) item.title = item.title.substr(4) + ", The";
      else item.title += "!";
      f.aliases.push_back({"tt" + padded(9000000 + i, 7), "tt" + cf_imdb(i), target.title,
                           std::to_string(*target.year) + "-06-01", 0});
      mapping[item.item_id] = target.item_id;
      phase[item.item_id] = 2;
    } else if (i <= 45) {
      f.aliases.push_back({padded(8000000 + i, 7), cf_imdb(i), target.title,
                           std::to_string(*target.year) + "-03-15", 0});
      f.aliases.push_back({padded(8000100 + i, 7), cf_imdb(i + 5), target.title,
                           std::to_string(*target.year) + "-11-20", 0});
      ambiguous.push_back(item.item_id);
      unresolved.push_back(item.item_id);
    } else if (i < 50) {
      item.title = "Lost Reel " + std::to_string(i);
      unresolved.push_back(item.item_id);
    } else {
      // Alias points at cf005, which r05 already holds from phase 1.
      item.title = "Borrowed Identity";
      item.year = 2001;
      f.aliases.push_back({padded(8000200 + i, 7), cf_imdb(5), "Borrowed Identity",
                           "2001-01-01", 0});
      unresolved.push_back(item.item_id);
    }
    conv.push_back(std::move(item));
  }
  // Phase-1 precedence: r01's title and year also match an alias for cf055.
  f.aliases.push_back({padded(8000300, 7), cf_imdb(55), conv[0].title,
                       std::to_string(*conv[0].year) + "-02-02", 0});
  f.conv_catalog = Catalog(conv);

  for (std::size_t u = 0; u < 20; ++u) {
    InteractionSequence seq;
    seq.user_id = "cu" + padded(u + 1, 2);
    for (std::size_t j = 0; j < 6; ++j) {
      seq.items.push_back(cf[(u * 7 + j * 11) % cf.size()].item_id);
      seq.timestamps.push_back(static_cast<std::int64_t>(1000 + j));
    }
    f.cf_interactions.push_back(std::move(seq));
  }

  f.answer_key["n_phase1"] = 30;
  f.answer_key["n_phase2"] = 10;
  f.answer_key["n_unresolved"] = unresolved.size();
  f.answer_key["ambiguous"] = ambiguous;
  f.answer_key["taken_in_phase1"] = Json::array({"r50"});
  f.answer_key["unresolved"] = unresolved;
  f.answer_key["mapping"] = mapping;
  f.answer_key["phase"] = phase;
  return f;
}

void write_linker_fixture(const LinkerFixture& f, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_catalog_csv(f.conv_catalog, dir + "/conv_catalog.csv");
  write_catalog_csv(f.cf_catalog, dir + "/cf_catalog.csv");
  write_interactions_csv(f.cf_interactions, dir + "/cf_interactions.csv");
  std::string aliases = "old_imdb_id,current_imdb_id,title,release_date\n";
  for (const auto& a : f.aliases) {
    aliases += a.old_imdb_id + "," + a.current_imdb_id + "," + a.title + "," + a.release_date +
               "\n";
  }
  write_text(dir + "/aliases.csv", aliases);
  write_text(dir + "/answer_key.json", f.answer_key.dump(2) + "\n");
}

std::vector<Json> small_conversations() {
  std::vector<Json> out;
  auto conv = [&](const std::string& id, Json turns) {
    Json c;
    c["conversation_id"] = id;
    c["turns"] = std::move(turns);
    out.push_back(std::move(c));
  };
  for (int i = 1; i <= 9; ++i) {
    conv("e" + std::to_string(i),
         Json::array({turn("seeker", "a", "I want something like The Orbit.", {"m001"}),
                      turn("recommender", "b", "Try Orbit Rising.", {"m00" + std::to_string(i)})}));
  }
  conv("n1", Json::array({turn("seeker", "a", "Anything good?", {}),
                          turn("recommender", "b", "No idea, sorry.", {})}));
  conv("n2", Json::array({turn("recommender", "b", "Try The Orbit.", {"m001"}),
                          turn("recommender", "b", "Or Orbit Rising.", {"m002"})}));
  conv("n3", Json::array({turn("seeker", "a", "Something spooky?", {}),
                          turn("recommender", "b", "Try The Unknown Film.", {"zz999"})}));
  return out;
}

AppConfig planted_app_config(const std::string& dir) {
  AppConfig config;
  config.paths.catalog = dir + "/catalog.csv";
  config.paths.embeddings = dir + "/embeddings.txt";
  config.paths.interactions = dir + "/interactions.csv";
  config.paths.conversations = dir + "/conversations.jsonl";
  config.paths.cassette = dir + "/cassette.jsonl";
  config.provider.cassette_path = config.paths.cassette;
  config.provider.mode = ProviderMode::kReplay;
  return config;
}

}  // namespace convrec::testing
