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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "convrec/error.hpp"
#include "convrec/evaluator.hpp"
#include "convrec/random.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

namespace convrec {
namespace {

using Ids = std::vector<std::string>;

TEST(HitAtK, Examples) {
  const Ids ranking = {"a", "b", "c", "d", "e", "f"};
  EXPECT_EQ(hit_at_k(ranking, Ids{"a"}, 1), 1.0);
  EXPECT_EQ(hit_at_k(ranking, Ids{"f"}, 5), 0.0);
  EXPECT_EQ(hit_at_k(Ids{"x", "y", "z", "a"}, Ids{"a", "b"}, 5), 1.0);
  EXPECT_EQ(hit_at_k(ranking, Ids{}, 5), 0.0);
  EXPECT_EQ(hit_at_k(ranking, Ids{"a"}, 0), 0.0);
}

TEST(NdcgAtK, Examples) {
  const Ids ranking = {"a", "b", "c", "d", "e"};
  EXPECT_EQ(ndcg_at_k(ranking, Ids{"a"}, 10), 1.0);
  EXPECT_NEAR(ndcg_at_k(ranking, Ids{"b"}, 5), std::log(2.0) / std::log(3.0), 1e-15);
  EXPECT_NEAR(ndcg_at_k(ranking, Ids{"b"}, 5), 0.6309, 1e-4);
  // IDCG is truncated at |truth|, and repeated truth ids count once.
  EXPECT_EQ(ndcg_at_k(ranking, Ids{"a", "b"}, 5), 1.0);
  EXPECT_EQ(ndcg_at_k(ranking, Ids{"a", "a"}, 5), 1.0);
  EXPECT_EQ(ndcg_at_k(ranking, Ids{"z"}, 5), 0.0);
}

Ids random_ranking(Rng& rng, std::size_t n) {
  Ids ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("i" + std::to_string(i));
  rng.shuffle(ids);
  return ids;
}

Ids random_truth(Rng& rng, std::size_t n) {
  Ids truth;
  const std::size_t m = rng.index(4);
  for (std::size_t i = 0; i < m; ++i) truth.push_back("i" + std::to_string(rng.index(n + 3)));
  return truth;
}

TEST(Metrics, OracleEquivalenceAndIdentities) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(30);
    const Ids ranking = random_ranking(rng, n);
    const Ids truth = random_truth(rng, n);
    double previous_hit = 0.0;
    for (std::size_t k : {1u, 5u, 10u, 30u}) {
      const double h = hit_at_k(ranking, truth, k);
      const double g = ndcg_at_k(ranking, truth, k);
      EXPECT_EQ(h, testing::oracle_hit(ranking, truth, k));
      EXPECT_EQ(g, testing::oracle_ndcg(ranking, truth, k));
      EXPECT_GE(g, 0.0);
      EXPECT_LE(g, 1.0);
      EXPECT_GE(h, previous_hit);
      previous_hit = h;
    }
    EXPECT_EQ(ndcg_at_k(ranking, truth, 1), hit_at_k(ranking, truth, 1));
  }
}

ExampleMetrics example_with(std::vector<double> hit, std::vector<double> ndcg, bool fallback) {
  return {"c", std::move(hit), std::move(ndcg), fallback};
}

TEST(Aggregate, MeanAndStandardError) {
  const std::vector<std::size_t> ks = {1};
  const MetricsReport report = aggregate({example_with({1}, {1}, false), example_with({0}, {0}, true),
                                          example_with({1}, {1}, false), example_with({0}, {0}, false)},
                                         ks);
  EXPECT_EQ(report.hit[0].mean, 0.5);
  ASSERT_TRUE(report.hit[0].standard_error.has_value());
  EXPECT_NEAR(*report.hit[0].standard_error, 0.2887, 5e-5);
  EXPECT_EQ(report.fallback_rate, 0.25);
  EXPECT_EQ(report.n_examples, 4u);
}

TEST(Aggregate, DegenerateCases) {
  const std::vector<std::size_t> ks = {1};
  const auto same = aggregate({example_with({1}, {1}, false), example_with({1}, {1}, false)}, ks);
  EXPECT_EQ(same.hit[0].standard_error, 0.0);
  const auto single = aggregate({example_with({1}, {1}, false)}, ks);
  EXPECT_EQ(single.hit[0].mean, 1.0);
  EXPECT_FALSE(single.hit[0].standard_error.has_value());
  const auto json = to_json(single);
  EXPECT_FALSE(json["metrics"]["H@1"].contains("se"));
  const auto none = aggregate({}, ks);
  EXPECT_EQ(none.n_examples, 0u);
  EXPECT_EQ(none.hit[0].mean, 0.0);
}

MetricsReport one_metric(double h5) {
  MetricsReport report;
  report.ks = {5};
  report.hit = {{h5, std::nullopt}};
  report.ndcg = {{h5 / 2, std::nullopt}};
  report.n_examples = 10;
  return report;
}

TEST(CompareRuns, RelativeImprovement) {
  const auto improvements = compare_runs(one_metric(0.0686), one_metric(0.0770));
  ASSERT_EQ(improvements.size(), 2u);
  EXPECT_EQ(improvements[0].metric, "H@5");
  ASSERT_TRUE(improvements[0].percent.has_value());
  EXPECT_NEAR(*improvements[0].percent, 12.2, 0.05);
  EXPECT_EQ(improvements[1].metric, "N@5");
  for (const auto& i : compare_runs(one_metric(0.3), one_metric(0.3))) EXPECT_EQ(i.percent, 0.0);
}

TEST(CompareRuns, ZeroBaselineIsUndefined) {
  const auto improvements = compare_runs(one_metric(0.0), one_metric(0.1));
  EXPECT_FALSE(improvements[0].percent.has_value());
  const auto json = to_json(improvements);
  EXPECT_EQ(json["H@5"]["improvement_pct"], "undefined");
}

TEST(CompareRuns, MismatchedReports) {
  MetricsReport other = one_metric(0.1);
  other.n_examples = 11;
  EXPECT_THROW(compare_runs(one_metric(0.1), other), UsageError);
  other = one_metric(0.1);
  other.ks = {10};
  EXPECT_THROW(compare_runs(one_metric(0.1), other), UsageError);
}

TEST(ParseKList, SortedUnique) {
  EXPECT_EQ(parse_k_list("10,1,5,5"), (std::vector<std::size_t>{1, 5, 10}));
  EXPECT_THROW(parse_k_list(""), UsageError);
  EXPECT_THROW(parse_k_list("0,5"), UsageError);
  EXPECT_THROW(parse_k_list("1,x"), UsageError);
}

ConversationTurn turn(Speaker speaker, std::vector<std::string> mentions) {
  return {speaker, speaker == Speaker::kSeeker ? "u" : "r", "text", std::move(mentions)};
}

Conversation conversation(std::string id, std::vector<ConversationTurn> turns) {
  Conversation c{std::move(id), std::move(turns), false};
  c.evaluable = evaluation_target(c).has_value();
  return c;
}

TEST(BuildEvalExamples, FinalTurnAndSkips) {
  const auto set = build_eval_examples(
      {conversation("one", {turn(Speaker::kSeeker, {}), turn(Speaker::kRecommender, {"x"})}),
       conversation("none", {turn(Speaker::kSeeker, {"y"}), turn(Speaker::kRecommender, {})})});
  ASSERT_EQ(set.examples.size(), 1u);
  EXPECT_EQ(set.examples[0].truth, (Ids{"x"}));
  EXPECT_EQ(set.examples[0].context.size(), 1u);
  EXPECT_EQ(set.n_skipped, 1u);
}

TEST(BuildEvalExamples, PerTurnMode) {
  const auto c = conversation("multi", {turn(Speaker::kSeeker, {}), turn(Speaker::kRecommender, {"a"}),
                                        turn(Speaker::kSeeker, {}), turn(Speaker::kRecommender, {"b"}),
                                        turn(Speaker::kRecommender, {})});
  const auto final_turn = build_eval_examples({c});
  ASSERT_EQ(final_turn.examples.size(), 1u);
  EXPECT_EQ(final_turn.examples[0].target_turn, 3u);
  EXPECT_EQ(final_turn.examples[0].context.size(), 3u);
  const auto per_turn = build_eval_examples({c}, TargetMode::kPerTurn);
  ASSERT_EQ(per_turn.examples.size(), 2u);
  EXPECT_EQ(per_turn.examples[0].truth, (Ids{"a"}));
  EXPECT_EQ(per_turn.examples[1].truth, (Ids{"b"}));
}

TEST(BuildEvalExamples, SmallFixture) {
  const auto load = load_conversations(testing::fixture_path("conversations_small.jsonl"),
                                       load_catalog(testing::fixture_path("planted/catalog.csv")));
  const auto set = build_eval_examples(load.conversations);
  EXPECT_EQ(set.examples.size(), 9u);
  EXPECT_EQ(set.n_skipped, 3u);
}

// Ranks items by a hash of the context text, so each example gets a fixed,
// unrelated ranking.
class ScrambleRecommender final : public Recommender {
 public:
  std::string_view name() const override { return "scramble"; }
  Recommendation recommend(const std::vector<ConversationTurn>& context,
                           std::size_t k) const override {
    std::uint64_t seed = 0;
    for (const auto& t : context) seed = seed * 131 + std::hash<std::string>{}(t.text);
    Rng rng(seed);
    Ids ids = random_ranking(rng, 12);
    std::vector<double> scores(ids.size());
    for (auto& s : scores) s = rng.uniform();
    Recommendation out;
    out.ranking = rank(scores, ids, {}, k);
    out.fallback_used = seed % 3 == 0;
    return out;
  }
};

ExampleSet synthetic_examples() {
  Rng rng(8);
  ExampleSet set;
  for (int i = 0; i < 60; ++i) {
    EvalExample e;
    e.conversation_id = "c" + std::to_string(i);
    e.context = {{Speaker::kSeeker, "u", "context " + std::to_string(i), {}}};
    e.truth = {"i" + std::to_string(rng.index(12))};
    set.examples.push_back(e);
  }
  return set;
}

TEST(Evaluate, ThreadCountDoesNotChangeReport) {
  const ScrambleRecommender recommender;
  const ExampleSet set = synthetic_examples();
  EvaluateOptions one;
  EvaluateOptions four;
  four.n_threads = 4;
  const MetricsReport a = evaluate(recommender, set, one);
  const MetricsReport b = evaluate(recommender, set, four);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.n_examples, 60u);
  EXPECT_EQ(a.hit[0].mean, a.ndcg[0].mean);
  EXPECT_LE(a.hit[0].mean, a.hit[1].mean);
  EXPECT_LE(a.hit[1].mean, a.hit[2].mean);
}

TEST(Evaluate, MatchesPerExampleScoring) {
  const ScrambleRecommender recommender;
  const ExampleSet set = synthetic_examples();
  const std::vector<std::size_t> ks = {1, 5, 10};
  std::vector<ExampleMetrics> metrics;
  for (const auto& e : set.examples) {
    const auto out = recommender.recommend(e.context, 10);
    metrics.push_back(score_example(e, out.ranking, ks, out.fallback_used));
  }
  EXPECT_EQ(evaluate(recommender, set, {}), aggregate(metrics, ks));
}

TEST(ReportJson, Keys) {
  const auto json = to_json(evaluate(ScrambleRecommender{}, synthetic_examples(), {}));
  for (const char* key : {"H@1", "H@5", "H@10", "N@1", "N@5", "N@10"}) {
    ASSERT_TRUE(json["metrics"].contains(key)) << key;
    EXPECT_TRUE(json["metrics"][key].contains("mean"));
    EXPECT_TRUE(json["metrics"][key].contains("se"));
  }
  EXPECT_EQ(json["n_examples"], 60);
  EXPECT_TRUE(json.contains("fallback_rate"));
  EXPECT_TRUE(json.contains("metadata"));
}

}  // namespace
}  // namespace convrec
