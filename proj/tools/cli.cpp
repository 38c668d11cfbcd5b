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

#include "cli.hpp"

#include <array>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <pthread.h>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "convrec/config.hpp"
#include "convrec/corpus.hpp"
#include "convrec/embeddings.hpp"
#include "convrec/error.hpp"
#include "convrec/evaluator.hpp"
#include "convrec/hashing.hpp"
#include "convrec/linker.hpp"
#include "convrec/llm_gateway.hpp"
#include "convrec/ranker.hpp"
#include "convrec/service.hpp"

namespace convrec::cli {

namespace {

using Json = nlohmann::ordered_json;

// Flag values that, when given, override the config file.
struct Overrides {
  std::string config;
  std::string catalog, interactions, conversations, embeddings, cassette;
  std::string provider;
  std::size_t k = 0;
  std::string backbone, loss;
  std::size_t dim = 0, epochs = 0, negatives = 0, window = 0, max_seq_len = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::string host;
  int port = 0;
  std::size_t max_requests = 0;
};

class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : sub_(app.add_subcommand(name, description)) {
    sub_->add_option("--config", o_.config, "JSON config file")->check(CLI::ExistingFile);
  }

  CLI::App* app() { return sub_; }
  Overrides& values() { return o_; }

  template <typename T>
  CLI::Option* flag(const std::string& name, T& target, const std::string& help) {
    return sub_->add_option(name, target, help);
  }

  void add_paths(bool catalog, bool interactions, bool conversations, bool embeddings,
                 bool cassette) {
    if (catalog) opt(flag("--catalog", o_.catalog, "catalog CSV"));
    if (interactions) opt(flag("--interactions", o_.interactions, "interactions CSV"));
    if (conversations) opt(flag("--conversations", o_.conversations, "conversations JSONL"));
    if (embeddings) opt(flag("--embeddings", o_.embeddings, "embedding file"));
    if (cassette) opt(flag("--cassette", o_.cassette, "LLM cassette JSONL"));
  }

  void add_provider() {
    opt(flag("--provider", o_.provider, "live | replay | record"))
        ->check(CLI::IsMember({"live", "replay", "record"}));
  }

  void add_training() {
    opt(flag("--backbone", o_.backbone, "pop | item2vec | fism | sasmini"))
        ->check(CLI::IsMember({"pop", "item2vec", "fism", "sasmini"}));
    opt(flag("--dim", o_.dim, "embedding dimension"));
    opt(flag("--epochs", o_.epochs, "training epochs"));
    opt(flag("--lr", o_.learning_rate, "SGD learning rate"));
    opt(flag("--negatives", o_.negatives, "negatives per positive"));
    opt(flag("--window", o_.window, "item2vec context window"));
    opt(flag("--max-seq-len", o_.max_seq_len, "sequence window"));
    opt(flag("--seed", o_.seed, "training seed"));
    opt(flag("--loss", o_.loss, "auto | full | sampled"))
        ->check(CLI::IsMember({"auto", "full", "sampled"}));
  }

  void add_k() { opt(flag("--k", o_.k, "ranking depth"))->check(CLI::Range(1, 100000)); }

  bool given(const std::string& name) const {
    auto it = given_.find(name);
    return it != given_.end() && it->second->count() > 0;
  }

  // Config file (if any), then environment, then explicit flags.
  AppConfig resolve() const {
    AppConfig c = o_.config.empty() ? AppConfig{} : load_app_config(o_.config);
    apply_environment(c);
    auto set = [&](const char* name, auto& target, const auto& value) {
      if (given(name)) target = value;
    };
    set("--catalog", c.paths.catalog, o_.catalog);
    set("--interactions", c.paths.interactions, o_.interactions);
    set("--conversations", c.paths.conversations, o_.conversations);
    set("--embeddings", c.paths.embeddings, o_.embeddings);
    set("--cassette", c.paths.cassette, o_.cassette);
    c.provider.cassette_path = c.paths.cassette;
    if (given("--provider")) c.provider.mode = *parse_provider_mode(o_.provider);
    set("--k", c.ranker.k, o_.k);
    if (given("--backbone")) c.training.backbone = *parse_backbone(o_.backbone);
    set("--dim", c.training.dim, o_.dim);
    set("--epochs", c.training.epochs, o_.epochs);
    set("--lr", c.training.learning_rate, o_.learning_rate);
    set("--negatives", c.training.negatives_per_positive, o_.negatives);
    set("--window", c.training.window, o_.window);
    set("--max-seq-len", c.training.max_seq_len, o_.max_seq_len);
    set("--seed", c.training.seed, o_.seed);
    if (given("--loss")) {
      c.training.loss_mode = o_.loss == "full"      ? LossMode::kFullSoftmax
                             : o_.loss == "sampled" ? LossMode::kSampled
                                                    : LossMode::kAuto;
    }
    set("--split-seed", c.split_seed, o_.split_seed);
    set("--host", c.service.host, o_.host);
    set("--port", c.service.port, o_.port);
    set("--max-requests", c.service.max_concurrent_requests, o_.max_requests);
    validate(c.training);
    return c;
  }

  CLI::Option* opt(CLI::Option* option) {
    given_[option->get_name()] = option;
    return option;
  }

 private:
  CLI::App* sub_;
  Overrides o_;
  std::map<std::string, CLI::Option*> given_;
};

std::string require_path(const std::string& path, const std::string& flag) {
  if (path.empty()) throw UsageError(flag + " is required");
  if (!std::filesystem::exists(path)) throw DataError("file not found: " + path);
  return path;
}

std::string hash_if_exists(const std::string& path) {
  return !path.empty() && std::filesystem::exists(path) ? sha256_file(path) : std::string();
}

void emit_metadata(std::ostream& err, const std::string& command, const AppConfig& c,
                   Json extra = Json::object()) {
  Json meta;
  meta["command"] = command;
  meta["seed"] = c.training.seed;
  meta["split_seed"] = c.split_seed;
  meta["config_hash"] = config_hash(c);
  meta["cassette_hash"] = hash_if_exists(c.paths.cassette);
  for (auto& [key, value] : extra.items()) meta[key] = value;
  err << Json{{"metadata", meta}}.dump() << "\n";
}

void write_json(const Json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << "\n";
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write " + path);
  file << j.dump(2) << "\n";
  if (!file) throw DataError("write failed: " + path);
}

std::vector<std::string> vocabulary(const Catalog* catalog,
                                    const std::vector<InteractionSequence>& sequences) {
  std::vector<std::string> ids;
  if (catalog != nullptr) {
    for (const auto& item : catalog->items()) ids.push_back(item.item_id);
    return ids;
  }
  std::set<std::string> seen;
  for (const auto& s : sequences) seen.insert(s.items.begin(), s.items.end());
  return {seen.begin(), seen.end()};
}

// ---- stats ---------------------------------------------------------------

int cmd_stats(Command& cmd, std::ostream& out, std::ostream& err,
              const std::optional<std::array<std::uint64_t, 3>>& counts, std::size_t min_len) {
  const AppConfig c = cmd.resolve();
  DatasetStats stats;
  if (counts) {
    stats = compute_stats((*counts)[0], (*counts)[1], (*counts)[2]);
  } else if (!c.paths.interactions.empty()) {
    require_path(c.paths.interactions, "--interactions");
    if (!c.paths.catalog.empty()) {
      const auto catalog = load_catalog(require_path(c.paths.catalog, "--catalog"),
                                        c.paths.catalog_format);
      stats = compute_stats(load_interactions(c.paths.interactions, catalog, min_len).sequences,
                            catalog);
    } else {
      stats = compute_stats(load_interactions(c.paths.interactions, min_len).sequences);
    }
  } else if (!c.paths.conversations.empty()) {
    const auto catalog = load_catalog(require_path(c.paths.catalog, "--catalog"),
                                      c.paths.catalog_format);
    const auto load = load_conversations(require_path(c.paths.conversations, "--conversations"),
                                         catalog);
    stats = compute_stats(derive_interactions(load.conversations), catalog);
  } else {
    throw UsageError("stats needs --interactions, --conversations or --counts");
  }
  emit_metadata(err, "stats", c);
  out << to_json(stats).dump(2) << "\n";
  return 0;
}

// ---- link ----------------------------------------------------------------

struct LinkFlags {
  std::string conv_catalog, cf_catalog, cf_interactions, conv_links, cf_links, aliases;
  std::string conversations, out_catalog, out_interactions, report;
  bool drop_unlinked = false;
  std::size_t min_seq_len = 1;
};

int cmd_link(Command& cmd, const LinkFlags& f, std::ostream& out, std::ostream& err) {
  const AppConfig c = cmd.resolve();
  const auto conv = load_catalog(require_path(f.conv_catalog, "--conv-catalog"));
  const auto cf = load_catalog(require_path(f.cf_catalog, "--cf-catalog"));
  const auto cf_seqs =
      load_interactions(require_path(f.cf_interactions, "--cf-interactions"), cf, f.min_seq_len);
  const LinkTable conv_links = f.conv_links.empty() ? link_table_from_catalog(conv)
                                                    : load_link_table(f.conv_links);
  const LinkTable cf_links =
      f.cf_links.empty() ? link_table_from_catalog(cf) : load_link_table(f.cf_links);
  const AliasTable aliases =
      f.aliases.empty() ? make_alias_table({}) : load_alias_table(f.aliases);

  std::vector<InteractionSequence> conv_seqs;
  if (!f.conversations.empty()) {
    conv_seqs = seeker_sequences(load_conversations(f.conversations, conv).conversations);
  }
  const auto result = link_catalogs(conv, conv_links, cf_links, aliases);
  LinkOptions options;
  options.drop_unlinked = f.drop_unlinked;
  const auto linked = build_linked_dataset(conv, cf, cf_seqs.sequences, result, conv_seqs, options);

  write_catalog_csv(linked.catalog, f.out_catalog);
  write_interactions_csv(linked.sequences, f.out_interactions);
  emit_metadata(err, "link", c,
                {{"alias_table_hash", hash_if_exists(f.aliases)},
                 {"cf_interactions_hash", sha256_file(f.cf_interactions)}});
  write_json(to_json(linked.report), f.report, out);
  return 0;
}

// ---- train ---------------------------------------------------------------

int cmd_train(Command& cmd, const std::string& out_path, const std::string& log_path,
              std::size_t min_len, std::ostream& out, std::ostream& err) {
  const AppConfig c = cmd.resolve();
  require_path(c.paths.interactions, "--interactions");
  std::optional<Catalog> catalog;
  if (!c.paths.catalog.empty()) {
    catalog = load_catalog(require_path(c.paths.catalog, "--catalog"), c.paths.catalog_format);
  }
  const auto load = catalog ? load_interactions(c.paths.interactions, *catalog, min_len)
                            : load_interactions(c.paths.interactions, min_len);
  const auto ids = vocabulary(catalog ? &*catalog : nullptr, load.sequences);
  const auto trained = train(load.sequences, ids, c.training);
  const auto embeddings = trained.model->embeddings();
  save_embeddings(embeddings, out_path);

  Json summary;
  summary["backbone"] = to_string(c.training.backbone);
  summary["n_items"] = embeddings.size();
  summary["dim"] = embeddings.dim();
  summary["n_sequences"] = load.sequences.size();
  summary["epoch_mean_loss"] = trained.log.epoch_mean_loss;
  if (!log_path.empty()) write_json(summary, log_path, out);
  emit_metadata(err, "train", c,
                {{"interactions_hash", sha256_file(c.paths.interactions)},
                 {"embeddings_hash", sha256_file(out_path)}});
  Json brief = summary;
  brief.erase("epoch_mean_loss");
  brief["final_loss"] = trained.log.epoch_mean_loss.empty()
                            ? Json()
                            : Json(trained.log.epoch_mean_loss.back());
  out << brief.dump(2) << "\n";
  return 0;
}

// ---- shared pipeline setup -----------------------------------------------

struct Pipeline {
  Catalog catalog;
  EmbeddingMatrix embeddings;
  std::unique_ptr<LlmGateway> gateway;
  std::unique_ptr<Model> cf_model;
  std::unique_ptr<Recommender> recommender;
};

bool needs_llm(const std::string& pipeline) { return pipeline == "bridge" || pipeline == "llm-only"; }

// Popularity comes from the interactions file when given, otherwise from
// `fallback_sequences` (the seeker mentions of the training split).
void build_pipeline(Pipeline& p, const AppConfig& c, const std::string& name,
                    const std::vector<InteractionSequence>& fallback_sequences) {
  std::vector<InteractionSequence> cf_sequences;
  if (!c.paths.interactions.empty()) {
    cf_sequences =
        load_interactions(require_path(c.paths.interactions, "--interactions"), p.catalog).sequences;
  } else {
    cf_sequences = fallback_sequences;
  }

  PipelineInputs inputs;
  std::vector<std::string> ids;
  if (needs_llm(name)) {
    p.embeddings = load_embeddings(require_path(c.paths.embeddings, "--embeddings"));
    ids = p.embeddings.item_ids();
    auto provider = c.provider;
    provider.validate();
    p.gateway = std::make_unique<LlmGateway>(provider);
    inputs.llm.embeddings = &p.embeddings;
    inputs.llm.gateway = p.gateway.get();
  } else {
    ids = vocabulary(&p.catalog, {});
  }
  inputs.llm.catalog = &p.catalog;
  inputs.llm.prompt_template = c.prompt;
  inputs.llm.popularity = compute_popularity(cf_sequences, ids);
  if (name == "cf-only") {
    p.cf_model = train(cf_sequences, ids, c.training).model;
    inputs.cf_model = p.cf_model.get();
  }
  p.recommender = make_recommender(name, inputs);
}

// ---- recommend -----------------------------------------------------------

int cmd_recommend(Command& cmd, const std::string& conversation_path, const std::string& pipeline,
                  std::ostream& out, std::ostream& err) {
  const AppConfig c = cmd.resolve();
  Pipeline p;
  p.catalog = load_catalog(require_path(c.paths.catalog, "--catalog"), c.paths.catalog_format);

  std::ifstream in(require_path(conversation_path, "--conversation"));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(conversation_path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("turns")) {
    throw DataError(conversation_path + ": expected an object with a 'turns' array");
  }
  std::size_t n_unresolved = 0;
  const auto turns = parse_turns(j["turns"], p.catalog, &n_unresolved);
  if (turns.empty()) throw DataError(conversation_path + ": no turns");

  build_pipeline(p, c, pipeline, seeker_sequences({Conversation{"", turns, false}}));
  const auto rec = p.recommender->recommend(turns, c.ranker.k);

  Json result = to_json(rec.ranking, &p.catalog);
  result["pipeline"] = pipeline;
  result["fallback_used"] = rec.fallback_used;
  result["llm_items"] = rec.llm_items;
  const auto& d = rec.diagnostics;
  result["diagnostics"] = {{"n_parsed", d.n_parsed},
                           {"n_unparsed_lines", d.n_unparsed_lines},
                           {"n_matched", d.n_matched},
                           {"n_unmatched", d.n_unmatched},
                           {"n_ambiguous", d.n_ambiguous},
                           {"n_duplicates", d.n_duplicates},
                           {"n_unresolved_mentions", n_unresolved},
                           {"prompt_hash", d.prompt_hash}};
  emit_metadata(err, "recommend", c,
                {{"pipeline", pipeline},
                 {"template_hash", template_hash(c.prompt)},
                 {"embeddings_hash", hash_if_exists(c.paths.embeddings)},
                 {"network_calls", p.gateway ? p.gateway->network_calls() : 0}});
  out << result.dump(2) << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalFlags {
  std::string split = "test";
  std::string pipeline = "bridge";
  std::string ks;
  std::string out;
  bool per_turn = false;
  std::size_t threads = 0;
};

int cmd_eval(Command& cmd, const EvalFlags& f, std::ostream& out, std::ostream& err) {
  AppConfig c = cmd.resolve();
  if (!f.ks.empty()) c.eval.ks = parse_k_list(f.ks);
  if (f.per_turn) c.eval.target_mode = TargetMode::kPerTurn;
  if (f.threads > 0) c.eval.n_threads = f.threads;

  Pipeline p;
  p.catalog = load_catalog(require_path(c.paths.catalog, "--catalog"), c.paths.catalog_format);
  const auto load =
      load_conversations(require_path(c.paths.conversations, "--conversations"), p.catalog);
  for (const auto& skip : load.skipped) {
    err << "skipped conversation on line " << skip.line << ": " << skip.message << "\n";
  }
  std::vector<Conversation> selected;
  std::vector<Conversation> train_split;
  if (f.split == "all") {
    selected = load.conversations;
    train_split = load.conversations;
  } else {
    auto split = split_conversations(load.conversations, c.split, c.split_seed);
    selected = f.split == "train" ? split.train : f.split == "valid" ? split.valid : split.test;
    train_split = std::move(split.train);
  }
  const auto examples = build_eval_examples(selected, c.eval.target_mode);
  build_pipeline(p, c, f.pipeline, seeker_sequences(train_split));

  RunMetadata meta;
  meta.pipeline = f.pipeline;
  meta.split = f.split;
  meta.seed = c.split_seed;
  meta.backbone = f.pipeline == "cf-only" ? std::string(to_string(c.training.backbone)) : "";
  meta.template_hash = needs_llm(f.pipeline) ? template_hash(c.prompt) : "";
  meta.cassette_hash = p.gateway ? p.gateway->cassette_hash() : "";
  meta.embeddings_hash = needs_llm(f.pipeline) ? sha256_file(c.paths.embeddings) : "";
  meta.config_hash = config_hash(c);

  EvaluateOptions options;
  options.ks = c.eval.ks;
  options.n_threads = c.eval.n_threads;
  const auto report = evaluate(*p.recommender, examples, options, meta);
  emit_metadata(err, "eval", c,
                {{"pipeline", f.pipeline},
                 {"n_examples", report.n_examples},
                 {"network_calls", p.gateway ? p.gateway->network_calls() : 0}});
  write_json(to_json(report), f.out, out);
  return 0;
}

// ---- serve ---------------------------------------------------------------

int cmd_serve(Command& cmd, std::ostream& out, std::ostream& err) {
  const AppConfig c = cmd.resolve();
  auto state = load_service_state(c);
  RecommendService service(state, c.service, std::min<std::size_t>(c.ranker.k, kMaxRequestK));
  HttpServer server(service);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind(c.service.host, c.service.port);
  emit_metadata(err, "serve", c,
                {{"host", c.service.host}, {"port", port},
                 {"embeddings_hash", state->artifact_hashes.at("embeddings")}});
  out << "listening on " << c.service.host << ":" << port << "\n" << std::flush;

  std::atomic<bool> signalled{false};
  std::jthread watcher([&server, &signalled, signals] {
    int received = 0;
    sigwait(&signals, &received);
    signalled = true;
    server.stop();
  });
  server.run();
  // run() can also return on a listener failure; wake the watcher then.
  if (!signalled) pthread_kill(watcher.native_handle(), SIGTERM);
  return 0;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Conversational recommendation pipeline: link, train, recommend, eval, serve");
  app.name("convrec");
  app.require_subcommand(1);

  Command stats(app, "stats", "Dataset statistics as JSON");
  stats.add_paths(true, true, true, false, false);
  std::vector<std::uint64_t> counts;
  std::size_t stats_min_len = 1;
  stats.flag("--counts", counts, "interactions users items")->expected(3);
  stats.flag("--min-seq-len", stats_min_len, "drop users with fewer events");

  Command link(app, "link", "Join a conversational catalog to a CF dataset");
  LinkFlags link_flags;
  link.flag("--conv-catalog", link_flags.conv_catalog, "conversational catalog CSV")->required();
  link.flag("--cf-catalog", link_flags.cf_catalog, "CF catalog CSV")->required();
  link.flag("--cf-interactions", link_flags.cf_interactions, "CF interactions CSV")->required();
  link.flag("--conv-links", link_flags.conv_links, "native_id,imdb_id CSV for the conv side");
  link.flag("--cf-links", link_flags.cf_links, "native_id,imdb_id CSV for the CF side");
  link.flag("--aliases", link_flags.aliases, "offline IMDb alias table CSV");
  link.flag("--conversations", link_flags.conversations, "append seeker mentions as sequences");
  link.flag("--out-catalog", link_flags.out_catalog, "merged catalog CSV")->required();
  link.flag("--out-interactions", link_flags.out_interactions, "merged interactions CSV")
      ->required();
  link.flag("--report", link_flags.report, "write the link report here instead of stdout");
  link.flag("--min-seq-len", link_flags.min_seq_len, "drop CF users with fewer events");
  link.app()->add_flag("--drop-unlinked", link_flags.drop_unlinked, "keep linked items only");

  Command train_cmd(app, "train", "Train a CF backbone and write its embeddings");
  train_cmd.add_paths(true, true, false, false, false);
  train_cmd.add_training();
  std::string train_out, train_log;
  std::size_t train_min_len = 1;
  train_cmd.flag("--out", train_out, "embedding file to write")->required();
  train_cmd.flag("--log", train_log, "per-epoch loss JSON");
  train_cmd.flag("--min-seq-len", train_min_len, "drop users with fewer events");

  Command recommend(app, "recommend", "Rank the catalog for one conversation");
  recommend.add_paths(true, true, false, true, true);
  recommend.add_provider();
  recommend.add_k();
  recommend.add_training();
  std::string conversation, rec_pipeline = "bridge";
  recommend.flag("--conversation", conversation, "JSON object with a 'turns' array")->required();
  recommend.flag("--pipeline", rec_pipeline, "bridge | llm-only | cf-only | pop")
      ->check(CLI::IsMember({"bridge", "llm-only", "cf-only", "pop"}));

  Command eval(app, "eval", "Offline H@k / N@k evaluation");
  eval.add_paths(true, true, true, true, true);
  eval.add_provider();
  eval.add_training();
  EvalFlags eval_flags;
  eval.opt(eval.flag("--split-seed", eval.values().split_seed, "conversation split seed"));
  eval.flag("--split", eval_flags.split, "train | valid | test | all")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}));
  eval.flag("--pipeline", eval_flags.pipeline, "bridge | llm-only | cf-only | pop")
      ->check(CLI::IsMember({"bridge", "llm-only", "cf-only", "pop"}));
  eval.flag("--k", eval_flags.ks, "comma-separated cutoffs, e.g. 1,5,10");
  eval.flag("--out", eval_flags.out, "report path (default stdout)");
  eval.flag("--threads", eval_flags.threads, "worker threads");
  eval.app()->add_flag("--per-turn", eval_flags.per_turn, "one example per recommender turn");

  Command serve(app, "serve", "HTTP recommendation service");
  serve.add_paths(true, true, false, true, true);
  serve.add_provider();
  serve.add_k();
  serve.opt(serve.flag("--host", serve.values().host, "bind address"));
  serve.opt(serve.flag("--port", serve.values().port, "bind port (0 picks one)"));
  serve.opt(serve.flag("--max-requests", serve.values().max_requests, "concurrent request cap"));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      const auto selected = app.get_subcommands();
      out << (selected.empty() ? app.help() : selected.back()->help());
      return 0;
    }
    err << "convrec: " << e.what() << "\n";
    if (app.get_subcommands().empty()) {
      err << app.help();
    } else {
      err << app.get_subcommands().front()->help();
    }
    return 2;
  }

  if (stats.app()->parsed()) {
    std::optional<std::array<std::uint64_t, 3>> c;
    if (!counts.empty()) c = std::array<std::uint64_t, 3>{counts[0], counts[1], counts[2]};
    return cmd_stats(stats, out, err, c, stats_min_len);
  }
  if (link.app()->parsed()) return cmd_link(link, link_flags, out, err);
  if (train_cmd.app()->parsed()) {
    return cmd_train(train_cmd, train_out, train_log, train_min_len, out, err);
  }
  if (recommend.app()->parsed()) return cmd_recommend(recommend, conversation, rec_pipeline, out, err);
  if (eval.app()->parsed()) return cmd_eval(eval, eval_flags, out, err);
  if (serve.app()->parsed()) return cmd_serve(serve, out, err);
  return 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const UsageError& e) {
    err << "convrec: usage error: " << e.what() << "\n";
    return 2;
  } catch (const ReplayMissError& e) {
    err << "convrec: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "convrec: error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace convrec::cli
