// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "kgchain/executor.hpp"
#include "kgchain/sampler.hpp"
#include "support.hpp"

using namespace kgchain;

TEST(Sampler, DeterministicForSeed) {
  auto g = kgchain::testing::random_kg(1);
  auto a = sample_queries(g, QueryType::p1, 5, 1);
  auto b = sample_queries(g, QueryType::p1, 5, 1);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].expr, b[i].expr);
  }
  EXPECT_EQ(a[0].id, "q-1p-00000");
}

TEST(Sampler, EveryTypeHasAnswersAndRightShape) {
  auto g = kgchain::testing::random_kg(7);
  for (auto t : kAllTypes) {
    auto qs = sample_queries(g, t, 40, 3);
    ASSERT_EQ(qs.size(), 40u);
    std::set<std::string> seen;
    for (const auto& q : qs) {
      EXPECT_EQ(q.type, t);
      EXPECT_EQ(classify(q.expr), t);
      EXPECT_FALSE(answer(q.expr, g).empty()) << render(q.expr);
      EXPECT_TRUE(seen.insert(render(q.expr)).second) << "duplicate " << render(q.expr);
    }
  }
}

TEST(Sampler, NegationRemovesSomething) {
  auto g = kgchain::testing::random_kg(12);
  for (auto t : {QueryType::in2, QueryType::in3, QueryType::pin, QueryType::pni}) {
    for (const auto& q : sample_queries(g, t, 20, 8)) {
      // dropping the negated operand must enlarge the answer set
      auto positive = q.expr;
      std::vector<QueryExpr> kids;
      for (std::size_t i = 0; i < positive.children.size(); ++i)
        if (!positive.negated[i]) kids.push_back(positive.children[i]);
      auto relaxed = kids.size() == 1 ? kids[0] : QueryExpr::conjunction(kids);
      EXPECT_LT(answer(q.expr, g).size(), answer(relaxed, g).size()) << render(q.expr);
    }
  }
}

TEST(Sampler, HardAnswersRequiredWithEasyGraph) {
  auto full = kgchain::testing::random_kg(13);
  auto parts = kgchain::testing::split_triples(full, 2);
  auto small = KnowledgeGraph::from_triples(parts.train, full.entities(), full.relations());
  SampleOptions opts;
  opts.easy_graph = &small;
  for (auto t : kAllTypes) {
    for (const auto& q : sample_queries(full, t, 10, 4, opts)) {
      auto s = split_answers(q.expr, small, full);
      EXPECT_FALSE(s.hard.empty()) << render(q.expr);
    }
  }
}

TEST(Sampler, SparseGraphExhaustsRetries) {
  // one relation, a simple path: no entity reached by two distinct branches
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}, {1, 0, 2}});
  SampleOptions opts;
  opts.max_retries = 50;
  try {
    sample_queries(g, QueryType::in2, 1, 1, opts);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("2in"), std::string::npos) << e.what();
  }
}

TEST(Sampler, RejectsGeneralAndEmptyGraph) {
  auto g = kgchain::testing::random_kg(1);
  EXPECT_THROW(sample_queries(g, QueryType::general, 1, 1), ValidationError);
  EXPECT_THROW(sample_queries(KnowledgeGraph{}, QueryType::p1, 1, 1), ValidationError);
}

TEST(Sampler, IdsCarryPrefixAndIndex) {
  auto g = kgchain::testing::random_kg(1);
  SampleOptions opts;
  opts.id_prefix = "test";
  auto qs = sample_queries(g, QueryType::up, 3, 9, opts);
  EXPECT_EQ(qs[2].id, "test-up-00002");
}
