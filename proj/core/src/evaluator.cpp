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

#include "convrec/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "convrec/error.hpp"

namespace convrec {

namespace {

std::unordered_set<std::string_view> truth_set(std::span<const std::string> truth) {
  return {truth.begin(), truth.end()};
}

EvalExample make_example(const Conversation& conversation, std::size_t turn) {
  EvalExample example;
  example.conversation_id = conversation.conversation_id;
  example.target_turn = turn;
  example.context.assign(conversation.turns.begin(),
                         conversation.turns.begin() + static_cast<std::ptrdiff_t>(turn));
  example.truth = conversation.turns[turn].mentioned_items;
  return example;
}

MetricSummary summarize(const std::vector<ExampleMetrics>& metrics, std::size_t k_index,
                        bool ndcg) {
  MetricSummary out;
  const auto n = static_cast<double>(metrics.size());
  if (metrics.empty()) return out;
  auto value = [&](const ExampleMetrics& m) { return ndcg ? m.ndcg[k_index] : m.hit[k_index]; };
  double sum = 0.0;
  for (const auto& m : metrics) sum += value(m);
  out.mean = sum / n;
  if (metrics.size() >= 2) {
    double ss = 0.0;
    for (const auto& m : metrics) ss += (value(m) - out.mean) * (value(m) - out.mean);
    out.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  nlohmann::ordered_json out;
  out["mean"] = s.mean;
  if (s.standard_error) out["se"] = *s.standard_error;
  return out;
}

}  // namespace

ExampleSet build_eval_examples(const std::vector<Conversation>& conversations, TargetMode mode) {
  ExampleSet out;
  for (const auto& conversation : conversations) {
    if (mode == TargetMode::kFinalTurn) {
      const auto target = evaluation_target(conversation);
      if (!target) {
        ++out.n_skipped;
        continue;
      }
      out.examples.push_back(make_example(conversation, *target));
      continue;
    }
    const std::size_t before = out.examples.size();
    for (std::size_t t = 0; t < conversation.turns.size(); ++t) {
      const auto& turn = conversation.turns[t];
      if (turn.speaker == Speaker::kRecommender && !turn.mentioned_items.empty() &&
          has_prior_seeker_turn(conversation, t)) {
        out.examples.push_back(make_example(conversation, t));
      }
    }
    if (out.examples.size() == before) ++out.n_skipped;
  }
  return out;
}

double hit_at_k(std::span<const std::string> ranking, std::span<const std::string> truth,
                std::size_t k) {
  const auto relevant = truth_set(truth);
  const std::size_t depth = std::min(k, ranking.size());
  for (std::size_t r = 0; r < depth; ++r) {
    if (relevant.count(ranking[r])) return 1.0;
  }
  return 0.0;
}

double ndcg_at_k(std::span<const std::string> ranking, std::span<const std::string> truth,
                 std::size_t k) {
  const auto relevant = truth_set(truth);
  if (relevant.empty() || k == 0) return 0.0;
  const std::size_t depth = std::min(k, ranking.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (relevant.count(ranking[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min(k, relevant.size());
  for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

std::vector<std::string> ranked_ids(const ScoredRanking& ranking) {
  std::vector<std::string> ids;
  ids.reserve(ranking.entries.size());
  for (const auto& e : ranking.entries) ids.push_back(e.item_id);
  return ids;
}

ExampleMetrics score_example(const EvalExample& example, const ScoredRanking& ranking,
                             std::span<const std::size_t> ks, bool fallback_used) {
  ExampleMetrics m;
  m.conversation_id = example.conversation_id;
  m.fallback_used = fallback_used;
  const auto ids = ranked_ids(ranking);
  for (std::size_t k : ks) {
    m.hit.push_back(hit_at_k(ids, example.truth, k));
    m.ndcg.push_back(ndcg_at_k(ids, example.truth, k));
  }
  return m;
}

MetricsReport aggregate(const std::vector<ExampleMetrics>& metrics, std::span<const std::size_t> ks,
                        RunMetadata metadata) {
  for (const auto& m : metrics) {
    if (m.hit.size() != ks.size() || m.ndcg.size() != ks.size()) {
      throw DataError("aggregate: per-example metrics do not match the k grid");
    }
  }
  MetricsReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.n_examples = metrics.size();
  report.metadata = std::move(metadata);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    report.hit.push_back(summarize(metrics, i, false));
    report.ndcg.push_back(summarize(metrics, i, true));
  }
  if (!metrics.empty()) {
    const auto n_fallback = std::count_if(metrics.begin(), metrics.end(),
                                          [](const ExampleMetrics& m) { return m.fallback_used; });
    report.fallback_rate = static_cast<double>(n_fallback) / static_cast<double>(metrics.size());
  }
  return report;
}

std::vector<Improvement> compare_runs(const MetricsReport& a, const MetricsReport& b) {
  if (a.ks != b.ks) throw UsageError("compare_runs: reports use different k grids");
  if (a.n_examples != b.n_examples) {
    throw UsageError("compare_runs: reports cover different example counts (" +
                     std::to_string(a.n_examples) + " vs " + std::to_string(b.n_examples) + ")");
  }
  std::vector<Improvement> out;
  auto add = [&](const std::string& name, double base, double cand) {
    Improvement imp{name, base, cand, std::nullopt};
    if (base != 0.0) imp.percent = 100.0 * (cand - base) / base;
    out.push_back(std::move(imp));
  };
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    add("H@" + std::to_string(a.ks[i]), a.hit[i].mean, b.hit[i].mean);
  }
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    add("N@" + std::to_string(a.ks[i]), a.ndcg[i].mean, b.ndcg[i].mean);
  }
  return out;
}

MetricsReport evaluate(const Recommender& recommender, const ExampleSet& examples,
                       const EvaluateOptions& options, RunMetadata metadata) {
  if (options.ks.empty()) throw UsageError("evaluate: empty k list");
  const std::size_t depth = *std::max_element(options.ks.begin(), options.ks.end());
  const auto& list = examples.examples;
  std::vector<ExampleMetrics> metrics(list.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < list.size(); i = next++) {
      try {
        const auto rec = recommender.recommend(list[i].context, depth);
        metrics[i] = score_example(list[i], rec.ranking, options.ks, rec.fallback_used);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = list.size();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(options.n_threads, 1, 64);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  auto report = aggregate(metrics, options.ks, std::move(metadata));
  report.n_skipped = examples.n_skipped;
  return report;
}

std::vector<std::size_t> parse_k_list(std::string_view text) {
  std::vector<std::size_t> ks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view token = text.substr(start, comma - start);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), k);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || k == 0) {
      throw UsageError("invalid k list '" + std::string(text) + "'");
    }
    ks.push_back(k);
    start = comma + 1;
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json out;
  out["n_examples"] = report.n_examples;
  out["n_skipped"] = report.n_skipped;
  out["fallback_rate"] = report.fallback_rate;
  nlohmann::ordered_json metrics;
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    metrics["H@" + std::to_string(report.ks[i])] = summary_json(report.hit[i]);
  }
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    metrics["N@" + std::to_string(report.ks[i])] = summary_json(report.ndcg[i]);
  }
  out["metrics"] = std::move(metrics);
  const auto& m = report.metadata;
  out["metadata"] = {{"pipeline", m.pipeline},           {"split", m.split},
                     {"seed", m.seed},                   {"backbone", m.backbone},
                     {"template_hash", m.template_hash}, {"cassette_hash", m.cassette_hash},
                     {"embeddings_hash", m.embeddings_hash}, {"config_hash", m.config_hash}};
  return out;
}

nlohmann::ordered_json to_json(const std::vector<Improvement>& improvements) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& imp : improvements) {
    out[imp.metric] = {{"baseline", imp.baseline},
                       {"candidate", imp.candidate},
                       {"improvement_pct", imp.percent ? nlohmann::ordered_json(*imp.percent)
                                                       : nlohmann::ordered_json("undefined")}};
  }
  return out;
}

}  // namespace convrec
