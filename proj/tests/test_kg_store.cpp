// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "kgchain/executor.hpp"
#include "kgchain/kg_store.hpp"
#include "support.hpp"

using namespace kgchain;
using kgchain::testing::TempDir;
using kgchain::testing::write_file;

namespace {

void write_dataset(const std::filesystem::path& dir, const std::string& train, const std::string& valid = "",
                   const std::string& test = "") {
  write_file(dir / "train.txt", train);
  write_file(dir / "valid.txt", valid);
  write_file(dir / "test.txt", test);
}

}  // namespace

TEST(KgStore, LoadsTwoLineFile) {
  TempDir dir("load");
  write_dataset(dir.path(), "0\t0\t1\n1\t1\t2\n");
  auto g = load_split(dir.path(), "train");
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.entities().size(), 3u);
  EXPECT_EQ(g.relations().size(), 2u);
  EXPECT_EQ(g.stats().lines, 2u);
}

TEST(KgStore, EmptyFileGivesEmptyIndices) {
  TempDir dir("empty");
  write_dataset(dir.path(), "");
  auto g = load_split(dir.path(), "train");
  EXPECT_EQ(g.size(), 0u);
  EXPECT_EQ(g.hr_index_size(), 0u);
  EXPECT_TRUE(g.tails(0, 0).empty());
  EXPECT_TRUE(g.with_relation(0).empty());
  EXPECT_TRUE(g.targets().empty());
}

TEST(KgStore, MissingFieldNamesFileAndLine) {
  TempDir dir("bad");
  write_dataset(dir.path(), "0\t0\n");
  try {
    load_split(dir.path(), "train");
    FAIL() << "expected a load error";
  } catch (const IoError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("train.txt:1:"), std::string::npos) << msg;
  }
}

TEST(KgStore, NonNumericIdRejected) {
  TempDir dir("nonnum");
  write_dataset(dir.path(), "0\t0\t1\nx\t0\t1\n");
  EXPECT_THROW(load_split(dir.path(), "train"), IoError);
}

TEST(KgStore, MissingDirectoryIsIoError) {
  EXPECT_THROW(load_split("/nonexistent/kgchain/dir", "train"), IoError);
}

TEST(KgStore, LabelsApplyAndUnknownLabelIdFails) {
  TempDir dir("labels");
  write_dataset(dir.path(), "0\t0\t1\n", "", "1\t0\t2\n");
  write_file(dir.path() / "entity_labels.tsv", "0\tAda\n1\tBasil\n2\tCleo\n");
  write_file(dir.path() / "relation_labels.tsv", "0\tknows\n");
  auto g = load_split(dir.path(), "train");
  EXPECT_EQ(g.entity_label(0), "Ada");
  // entity 2 only occurs in test, but labels cover the whole dataset
  EXPECT_EQ(g.entity_label(2), "Cleo");
  EXPECT_EQ(g.relation_label(0), "knows");

  write_file(dir.path() / "entity_labels.tsv", "0\tAda\n9\tNobody\n");
  EXPECT_THROW(load_split(dir.path(), "train"), IoError);
}

TEST(KgStore, DuplicatesCollapsed) {
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}, {0, 0, 1}, {1, 0, 2}});
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.stats().duplicates, 1u);
}

TEST(KgStore, MergeAddsAndIsIdempotent) {
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}, {1, 1, 2}});
  std::vector<Triple> extra{{2, 0, 3}};
  auto m = merge(g, extra);
  EXPECT_EQ(m.size(), 3u);
  std::vector<Triple> again{{0, 0, 1}};
  EXPECT_EQ(merge(g, again).size(), 2u);
  EXPECT_EQ(merge(m, extra).triples(), m.triples());
  EXPECT_TRUE(is_subgraph(g, m));
  EXPECT_FALSE(is_subgraph(m, g));
}

TEST(KgStore, SplitGraphsNest) {
  TempDir dir("nest");
  write_dataset(dir.path(), "0\t0\t1\n1\t0\t2\n", "2\t1\t3\n", "3\t1\t4\n0\t0\t1\n");
  auto s = load_splits(dir.path());
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.train_valid.size(), 3u);
  EXPECT_EQ(s.train_valid_test.size(), 4u);
  EXPECT_TRUE(is_subgraph(s.train, s.train_valid));
  EXPECT_TRUE(is_subgraph(s.train_valid, s.train_valid_test));
  // the shared dictionary covers ids that only appear in later splits
  EXPECT_TRUE(s.train.has_entity(4));
}

TEST(KgStore, NeighborsExamples) {
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}}, {{0, "a"}, {1, "b"}, {2, "lonely"}});
  ASSERT_EQ(g.neighbors(0).size(), 1u);
  EXPECT_EQ(g.neighbors(0)[0], (Triple{0, 0, 1}));
  EXPECT_TRUE(g.neighbors(2).empty());
  EXPECT_THROW(g.neighbors(7), ValidationError);
}

TEST(KgStore, StarGraphNeighborsMatchScan) {
  std::vector<Triple> ts;
  for (EntityId t = 1; t <= 5; ++t) ts.push_back({0, t % 2, t});
  ts.push_back({3, 0, 4});
  auto g = KnowledgeGraph::from_triples(ts);
  std::vector<Triple> scan;
  for (const auto& t : g.triples())
    if (t.head == 0 || t.tail == 0) scan.push_back(t);
  auto got = g.neighbors(0);
  EXPECT_EQ(got.size(), 5u);
  EXPECT_TRUE(std::equal(got.begin(), got.end(), scan.begin(), scan.end()));
}

TEST(KgStore, SelfLoopListedOnce) {
  auto g = KnowledgeGraph::from_triples({{4, 0, 4}});
  EXPECT_EQ(g.neighbors(4).size(), 1u);
}

// Every index agrees with a brute scan of the triple list.
TEST(KgStore, IndicesMatchBruteScan) {
  auto g = kgchain::testing::random_kg(11, 60, 5, 400);
  for (EntityId e = 0; e < 60; ++e) {
    for (RelationId r = 0; r < 5; ++r) {
      std::vector<EntityId> tails;
      std::vector<EntityId> heads;
      for (const auto& t : g.triples()) {
        if (t.head == e && t.relation == r) tails.push_back(t.tail);
        if (t.tail == e && t.relation == r) heads.push_back(t.head);
      }
      std::sort(heads.begin(), heads.end());
      auto gt = g.tails(e, r);
      auto gh = g.heads(e, r);
      ASSERT_TRUE(std::equal(gt.begin(), gt.end(), tails.begin(), tails.end()));
      ASSERT_TRUE(std::equal(gh.begin(), gh.end(), heads.begin(), heads.end()));
    }
    std::vector<Triple> inc;
    for (const auto& t : g.triples())
      if (t.tail == e) inc.push_back(t);
    auto gi = g.incoming(e);
    ASSERT_TRUE(std::equal(gi.begin(), gi.end(), inc.begin(), inc.end()));
  }
  for (RelationId r = 0; r < 5; ++r) {
    std::vector<Triple> rel;
    for (const auto& t : g.triples())
      if (t.relation == r) rel.push_back(t);
    auto gr = g.with_relation(r);
    ASSERT_TRUE(std::equal(gr.begin(), gr.end(), rel.begin(), rel.end()));
  }
}

TEST(KgStore, UnknownLabelLookupsThrow) {
  auto g = KnowledgeGraph::from_triples({{0, 0, 1}});
  EXPECT_EQ(g.entity_label(1), "ent_1");
  EXPECT_THROW(g.entity_label(5), ValidationError);
  EXPECT_THROW(g.relation_label(5), ValidationError);
}
