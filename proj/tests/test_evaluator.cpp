// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>

#include "kgchain/evaluator.hpp"
#include "kgchain/oracle.hpp"
#include "kgchain/sampler.hpp"
#include "support.hpp"

using namespace kgchain;

namespace {

// ids 0..7 with plain labels, plus one label containing ", "
KnowledgeGraph labelled() {
  Dictionary names{{0, "Paris"},  {1, "Berlin"}, {2, "Rome"},  {3, "Oslo"},
                   {4, "Lima"},   {5, "Quito"},  {6, "Paris, Texas"}, {7, "Texas"}};
  return KnowledgeGraph::from_triples({{0, 0, 1}, {6, 0, 7}}, names);
}

Prediction ranked(std::vector<EntityId> ids) {
  Prediction p;
  p.parse_ok = true;
  p.parsed = std::move(ids);
  return p;
}

}  // namespace

TEST(ParsePrediction, FinalBlock) {
  auto g = labelled();
  LabelIndex labels(g);
  auto p = parse_prediction("STEP 1: projection e0 rel=0 -> v? = {Paris}\nFINAL: {Paris}", labels);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.parsed, (std::vector<EntityId>{0}));
}

TEST(ParsePrediction, MissingFinal) {
  auto g = labelled();
  LabelIndex labels(g);
  auto p = parse_prediction("I think it is Paris.", labels);
  EXPECT_FALSE(p.parse_ok);
  EXPECT_TRUE(p.parsed.empty());
}

TEST(ParsePrediction, LastBlockWinsCaseFoldAndDedupe) {
  auto g = labelled();
  LabelIndex labels(g);
  auto p = parse_prediction("FINAL: {Oslo}\nthinking again\nFINAL: {rome, Berlin, Rome, Atlantis}\n", labels);
  EXPECT_TRUE(p.parse_ok);
  EXPECT_EQ(p.parsed, (std::vector<EntityId>{2, 1}));
  EXPECT_EQ(p.unmatched, 1u);
}

TEST(ParsePrediction, LabelsWithCommas) {
  auto g = labelled();
  LabelIndex labels(g);
  auto p = parse_prediction("FINAL: {Paris, Texas, Texas, Paris}", labels);
  EXPECT_EQ(p.parsed, (std::vector<EntityId>{6, 7, 0}));
  auto empty = parse_prediction("FINAL: {}", labels);
  EXPECT_TRUE(empty.parse_ok);
  EXPECT_TRUE(empty.parsed.empty());
}

TEST(ExtractQuery, FindsQueryLine) {
  auto q = extract_query("blah\n\nCONTEXT:\n(none)\n\nQUERY: (p 1 (p 2 (e 3))) means: find x.\n");
  ASSERT_TRUE(q);
  EXPECT_EQ(render(*q), "(p 1 (p 2 (e 3)))");
  EXPECT_FALSE(extract_query("no query here"));
  EXPECT_FALSE(extract_query("x\nQUERY: (p 1 oops"));
}

// Raw list [h1, e, h2]. Every correct answer is filtered, so h2 is not pushed
// down by h1 or e and both rank first.
TEST(Mrr, CorrectAnswersAheadAreFiltered) {
  AnswerSplit a{{2}, {1, 3}};
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({1, 2, 3}), a), 1.0);
  // the unfiltered rank sees them: (1 + 1/3) / 2
  EXPECT_DOUBLE_EQ(mrr_unfiltered(ranked({1, 2, 3}), a), (1.0 + 1.0 / 3.0) / 2.0);
}

TEST(Mrr, SiblingConstructions) {
  // single hard answer first
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({4}), {{}, {4}}), 1.0);
  // absent hard answer contributes 0: (1 + 0) / 2
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({1, 2}), {{2}, {1, 3}}), 0.5);
  // two wrong entities before the only hard answer: 1/3
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({5, 6, 1}), {{}, {1}}), 1.0 / 3.0);
  // easy answers in front are filtered away entirely
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({2, 7, 1}), {{2, 7}, {1}}), 1.0);
  // wrong, hard, wrong, easy, hard: ranks 2 and 3 -> (1/2 + 1/3) / 2
  EXPECT_DOUBLE_EQ(mrr_filtered(ranked({9, 1, 8, 2, 3}), {{2}, {1, 3}}), (0.5 + 1.0 / 3.0) / 2.0);
}

TEST(Mrr, EdgeCases) {
  EXPECT_THROW(mrr_filtered(ranked({1}), {{1}, {}}), ValidationError);
  Prediction unparsed;
  EXPECT_DOUBLE_EQ(mrr_filtered(unparsed, {{}, {1}}), 0.0);
}

TEST(Mrr, FilteringNeverLowersScore) {
  auto rng = make_rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<EntityId> list;
    for (EntityId e = 0; e < 12; ++e)
      if (uniform_index(rng, 2)) list.push_back(e);
    shuffle(list, rng);
    AnswerSplit a;
    for (EntityId e = 0; e < 12; ++e) {
      auto roll = uniform_index(rng, 4);
      if (roll == 0) a.easy.push_back(e);
      if (roll == 1) a.hard.push_back(e);
    }
    if (a.hard.empty()) a.hard.push_back(11);
    std::erase(a.easy, 11);
    EXPECT_GE(mrr_filtered(ranked(list), a), mrr_unfiltered(ranked(list), a));
  }
}

TEST(Accuracy, RecallAndExact) {
  AnswerSplit a{{9}, {1, 2}};
  EXPECT_DOUBLE_EQ(accuracy(ranked({1, 2, 5}), a), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(ranked({5}), a), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(ranked({2}), a), 0.5);
  EXPECT_DOUBLE_EQ(accuracy(ranked({1, 2, 9}), a, AccuracyMode::exact_set), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(ranked({1, 2}), a, AccuracyMode::exact_set), 0.0);
  EXPECT_THROW(accuracy(ranked({1}), {{1}, {}}), ValidationError);
}

TEST(Aggregate, AllOnesGiveHundreds) {
  std::vector<SampleScore> s;
  for (auto t : kAllTypes) s.push_back({t, 1.0, 1.0});
  auto r = aggregate(s);
  EXPECT_EQ(format_percent(r.avg_p->mrr), "100.0");
  EXPECT_EQ(format_percent(r.avg_ood->mrr), "100.0");
  EXPECT_EQ(format_percent(r.avg_n->accuracy), "100.0");
  EXPECT_EQ(r.per_type.size(), 14u);
}

TEST(Aggregate, OnlyOodTypes) {
  std::vector<SampleScore> s{{QueryType::pi, 0.5, 0.5}, {QueryType::ip, 0.5, 0.5}, {QueryType::u2, 1, 1},
                             {QueryType::up, 0, 0}};
  auto r = aggregate(s);
  ASSERT_TRUE(r.avg_ood);
  EXPECT_DOUBLE_EQ(r.avg_ood->mrr, 0.5);
  EXPECT_FALSE(r.avg_n);
  ASSERT_TRUE(r.avg_p);  // mean over the present positive types
  auto table = report_table(r);
  EXPECT_NE(table.find("-"), std::string::npos);
}

TEST(Aggregate, PerTypeMeansAreUnweightedAcrossTypes) {
  // 3 samples of 1p at 1.0, one 2p at 0.0: per-type means 1.0 and 0.0
  std::vector<SampleScore> s{{QueryType::p1, 1, 1}, {QueryType::p1, 1, 1}, {QueryType::p1, 1, 1},
                             {QueryType::p2, 0, 0}};
  auto r = aggregate(s);
  EXPECT_DOUBLE_EQ(r.avg_p->mrr, 0.5);
  EXPECT_EQ(r.per_type.at(QueryType::p1).samples, 3u);
}

// A published baseline row whose group columns are the plain means of its
// per-type columns.
TEST(Aggregate, BaselineRowReproduces) {
  const std::map<QueryType, double> row{{QueryType::p1, 54.6}, {QueryType::p2, 15.3}, {QueryType::p3, 10.8},
                                        {QueryType::i2, 39.7}, {QueryType::i3, 51.4}, {QueryType::pi, 27.6},
                                        {QueryType::ip, 19.1}, {QueryType::u2, 22.1}, {QueryType::up, 11.6}};
  std::vector<SampleScore> s;
  for (auto [t, v] : row) s.push_back({t, v / 100.0, v / 100.0});
  auto r = aggregate(s);
  EXPECT_EQ(format_percent(r.avg_p->mrr), "28.0");
  EXPECT_EQ(format_percent(r.avg_ood->mrr), "20.1");
  EXPECT_FALSE(r.avg_n);
}

TEST(Aggregate, RoundingHalfUp) {
  EXPECT_EQ(format_percent(0.71925), "71.9");
  EXPECT_EQ(format_percent(0.71950), "72.0");
  EXPECT_EQ(format_percent(0.0), "0.0");
  EXPECT_EQ(format_percent(1.0), "100.0");
}

TEST(Aggregate, ReportJsonShape) {
  std::vector<SampleScore> s{{QueryType::in2, 0.25, 0.5}};
  EvalCounts c;
  c.unknown_ids = {"zzz"};
  auto j = report_to_json(aggregate(s, c));
  EXPECT_TRUE(j["avg_p"].is_null());
  EXPECT_DOUBLE_EQ(j["avg_n"]["mrr"].get<double>(), 0.25);
  EXPECT_EQ(j["per_type"]["2in"]["samples"], 1);
  EXPECT_EQ(j["counts"]["unknown_ids"][0], "zzz");
}

TEST(Aggregate, TableColumnOrder) {
  std::vector<SampleScore> s{{QueryType::p1, 1, 1}};
  auto table = report_table(aggregate(s));
  auto header = table.substr(0, table.find('\n'));
  auto at = [&](const char* col) { return header.find(col); };
  EXPECT_LT(at("avg_p"), at("avg_ood"));
  EXPECT_LT(at("avg_ood"), at("avg_n"));
  EXPECT_LT(at("avg_n"), at(" 1p"));
  EXPECT_LT(at(" up"), at("2in"));
  EXPECT_LT(at("pin"), at("pni"));
}

TEST(Oracle, CompleteGraphRecoversAllAnswersTrainGraphOnlyEasy) {
  auto full = kgchain::testing::random_kg(6);
  auto parts = kgchain::testing::split_triples(full, 7);
  auto small = KnowledgeGraph::from_triples(parts.train, full.entities(), full.relations());
  SampleOptions opts;
  opts.easy_graph = &small;
  const LabelIndex labels(full);
  for (auto t : kAllTypes) {
    for (const auto& q : sample_queries(full, t, 5, 1, opts)) {
      PromptParts parts_;
      parts_.query = &q.expr;
      auto prompt = render_prompt(parts_, full);
      auto split = split_answers(q.expr, small, full);

      auto pred = parse_prediction(oracle_answer(prompt, full), labels);
      EntitySet got(pred.parsed.begin(), pred.parsed.end());
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, answer(q.expr, full));
      EXPECT_DOUBLE_EQ(mrr_filtered(pred, split), 1.0);

      auto weak = parse_prediction(oracle_answer(prompt, small), labels);
      EntitySet easy(weak.parsed.begin(), weak.parsed.end());
      std::sort(easy.begin(), easy.end());
      EXPECT_EQ(easy, split.easy);
      // the small graph never reaches a hard answer
      EXPECT_DOUBLE_EQ(accuracy(weak, split), 0.0);
    }
  }
  EXPECT_THROW(oracle_answer("no query", full), ValidationError);
}
