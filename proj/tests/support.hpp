// SPDX-License-Identifier: Apache-2.0
#pragma once
// Shared fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgchain/kg_store.hpp"
#include "kgchain/util.hpp"

namespace kgchain::testing {

/// Seeded random graph with typed relations: each relation links a random
/// domain of 20 heads to a random range of 20 tails, so (head, relation)
/// pairs fan out and joins have overlapping operands. No self loops.
inline KnowledgeGraph random_kg(std::uint64_t seed, std::uint32_t entities = 100, std::uint32_t relations = 8,
                                std::size_t triples = 600) {
  auto rng = make_rng(seed);
  const std::size_t side = std::min<std::size_t>(entities, 20);
  std::vector<EntityId> all(entities);
  for (EntityId e = 0; e < entities; ++e) all[e] = e;
  std::vector<std::vector<EntityId>> domain(relations);
  std::vector<std::vector<EntityId>> range(relations);
  for (RelationId r = 0; r < relations; ++r) {
    shuffle(all, rng);
    domain[r].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(side));
    shuffle(all, rng);
    range[r].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(side));
  }
  std::set<Triple> ts;
  while (ts.size() < triples) {
    auto r = static_cast<RelationId>(uniform_index(rng, relations));
    auto h = domain[r][uniform_index(rng, side)];
    auto t = range[r][uniform_index(rng, side)];
    if (h != t) ts.insert({h, r, t});
  }
  Dictionary ents;
  Dictionary rels;
  for (EntityId e = 0; e < entities; ++e) ents[e] = "ent_" + std::to_string(e);
  for (RelationId r = 0; r < relations; ++r) rels[r] = "rel_" + std::to_string(r);
  return KnowledgeGraph::from_triples({ts.begin(), ts.end()}, std::move(ents), std::move(rels));
}

/// Random graph split 80/10/10 into train/valid/test triples.
struct RandomSplit {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
};

inline RandomSplit split_triples(const KnowledgeGraph& g, std::uint64_t seed) {
  std::vector<Triple> all(g.triples().begin(), g.triples().end());
  auto rng = make_rng(seed);
  shuffle(all, rng);
  RandomSplit s;
  const auto a = all.size() * 8 / 10;
  const auto b = all.size() * 9 / 10;
  s.train.assign(all.begin(), all.begin() + a);
  s.valid.assign(all.begin() + a, all.begin() + b);
  s.test.assign(all.begin() + b, all.end());
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("kgchain-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace kgchain::testing
