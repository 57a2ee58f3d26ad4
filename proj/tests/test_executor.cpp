// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "kgchain/compiler.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/sampler.hpp"
#include "support.hpp"

using namespace kgchain;

namespace {

// a=0 b=1 c=2 d=3; r=0 s=1
KnowledgeGraph three_triples() { return KnowledgeGraph::from_triples({{0, 0, 1}, {0, 0, 2}, {3, 1, 1}}); }

}  // namespace

TEST(Answer, SingleEdge) {
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}});
  EXPECT_EQ(answer(parse("(p 0 (e 0))"), g), (EntitySet{1}));
  EXPECT_EQ(answer(parse("(pi 0 (e 1))"), g), (EntitySet{0}));
}

TEST(Answer, TwoIntersectionByHand) {
  EXPECT_EQ(answer(parse("(and (p 0 (e 0)) (p 1 (e 3)))"), three_triples()), (EntitySet{1}));
}

TEST(Answer, SelfDifferenceIsEmpty) {
  EXPECT_TRUE(answer(parse("(and (p 0 (e 0)) (not (p 0 (e 0))))"), three_triples()).empty());
}

TEST(Answer, UnionAndEmptyPropagation) {
  auto g = three_triples();
  EXPECT_EQ(answer(parse("(or (p 0 (e 0)) (p 1 (e 3)))"), g), (EntitySet{1, 2}));
  // nothing leaves b, so the second hop is empty
  EXPECT_TRUE(answer(parse("(p 0 (p 0 (e 0)))"), g).empty());
}

TEST(Answer, UnknownIdsRejected) {
  auto g = three_triples();
  EXPECT_THROW(answer(parse("(p 0 (e 99))"), g), ValidationError);
  EXPECT_THROW(answer(parse("(p 7 (e 0))"), g), ValidationError);
}

TEST(Chain, OneProjectionMatchesDirect) {
  auto g = three_triples();
  auto q = parse("(p 1 (e 3))");
  EXPECT_EQ(answer_chain(compile(q), g).final_answers, answer(q, g));
}

TEST(Chain, TwoIntersectionBindings) {
  auto r = answer_chain(compile(parse("(and (p 0 (e 0)) (p 1 (e 3)))")), three_triples());
  EXPECT_EQ(r.bindings.at("v1'"), (EntitySet{1, 2}));
  EXPECT_EQ(r.bindings.at("v2'"), (EntitySet{1}));
  EXPECT_EQ(r.final_answers, (EntitySet{1}));
}

TEST(Chain, UnboundVariableRejected) {
  DecompositionChain c;
  c.steps.push_back({StepKind::projection, {StepInput{false, 0, "v9"}}, 0, false, "v?"});
  EXPECT_THROW(answer_chain(c, three_triples()), ValidationError);
}

TEST(Chain, MatchesDirectOnRandomGraph) {
  auto g = kgchain::testing::random_kg(99);
  for (auto t : kAllTypes)
    for (const auto& gq : sample_queries(g, t, 50, 31))
      ASSERT_EQ(answer_chain(compile(gq.expr), g).final_answers, answer(gq.expr, g)) << render(gq.expr);
}

TEST(Split, EqualGraphsHaveNoHardAnswers) {
  auto g = three_triples();
  auto s = split_answers(parse("(p 0 (e 0))"), g, g);
  EXPECT_EQ(s.easy, (EntitySet{1, 2}));
  EXPECT_TRUE(s.hard.empty());
}

TEST(Split, HeldOutTripleMakesHardAnswer) {
  auto small = three_triples();
  std::vector<Triple> extra{{0, 0, 4}};
  auto big = merge(small, extra);
  auto s = split_answers(parse("(p 0 (e 0))"), small, big);
  EXPECT_EQ(s.easy, (EntitySet{1, 2}));
  EXPECT_EQ(s.hard, (EntitySet{4}));
  EXPECT_EQ(s.all(), (EntitySet{1, 2, 4}));
}

TEST(Split, NotNestedRejected) {
  auto a = KnowledgeGraph::from_triples({{0, 0, 1}});
  auto b = KnowledgeGraph::from_triples({{0, 0, 2}});
  EXPECT_THROW(split_answers(parse("(p 0 (e 0))"), a, b), ValidationError);
}

// easy and hard are disjoint and together give the larger-graph answers.
TEST(Split, PartitionsLargerAnswers) {
  auto full = kgchain::testing::random_kg(4);
  auto parts = kgchain::testing::split_triples(full, 1);
  auto small = KnowledgeGraph::from_triples(parts.train, full.entities(), full.relations());
  for (auto t : kAllTypes) {
    for (const auto& gq : sample_queries(full, t, 20, 2)) {
      auto s = split_answers(gq.expr, small, full);
      EXPECT_TRUE(set_intersection(s.easy, s.hard).empty());
      // negation can make an easy answer disappear on the larger graph
      auto big = answer(gq.expr, full);
      EXPECT_EQ(set_difference(big, s.easy), s.hard);
    }
  }
}
