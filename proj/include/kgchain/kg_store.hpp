// SPDX-License-Identifier: Apache-2.0
#pragma once
// Immutable, fully indexed triple store.
//
// Indices:
//   (head, relation) -> sorted tails
//   (tail, relation) -> sorted heads
//   relation         -> triples, sorted
//   entity           -> incident triples (self-loops listed once), sorted
//
// Dataset layout on disk: <dir>/{train,valid,test}.txt with `head\trel\ttail`
// decimal ids, plus optional entity_labels.tsv / relation_labels.tsv.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgchain/error.hpp"
#include "kgchain/util.hpp"

namespace kgchain {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

using Dictionary = std::map<std::uint32_t, std::string>;

struct LoadStats {
  std::size_t lines = 0;
  std::size_t duplicates = 0;
};

class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Builds a graph from raw triples. Ids missing from the dictionaries get
  /// default labels (`ent_<id>` / `rel_<id>`). Duplicates are dropped.
  static KnowledgeGraph from_triples(std::vector<Triple> triples, Dictionary entities = {},
                                     Dictionary relations = {}) {
    KnowledgeGraph g;
    std::sort(triples.begin(), triples.end());
    auto last = std::unique(triples.begin(), triples.end());
    g.stats_.duplicates = static_cast<std::size_t>(triples.end() - last);
    triples.erase(last, triples.end());
    g.triples_ = std::move(triples);
    g.entities_ = std::move(entities);
    g.relations_ = std::move(relations);
    for (const auto& t : g.triples_) {
      g.entities_.try_emplace(t.head, "ent_" + std::to_string(t.head));
      g.entities_.try_emplace(t.tail, "ent_" + std::to_string(t.tail));
      g.relations_.try_emplace(t.relation, "rel_" + std::to_string(t.relation));
    }
    g.build_indices();
    return g;
  }

  const std::vector<Triple>& triples() const noexcept { return triples_; }
  std::size_t size() const noexcept { return triples_.size(); }
  const Dictionary& entities() const noexcept { return entities_; }
  const Dictionary& relations() const noexcept { return relations_; }
  const LoadStats& stats() const noexcept { return stats_; }

  bool has_entity(EntityId e) const { return entities_.contains(e); }
  bool has_relation(RelationId r) const { return relations_.contains(r); }

  const std::string& entity_label(EntityId e) const {
    auto it = entities_.find(e);
    if (it == entities_.end()) throw ValidationError("unknown entity id " + std::to_string(e));
    return it->second;
  }

  const std::string& relation_label(RelationId r) const {
    auto it = relations_.find(r);
    if (it == relations_.end()) throw ValidationError("unknown relation id " + std::to_string(r));
    return it->second;
  }

  bool contains(const Triple& t) const {
    return std::binary_search(triples_.begin(), triples_.end(), t);
  }

  std::span<const EntityId> tails(EntityId head, RelationId r) const {
    return lookup(index_hr_, key(head, r));
  }

  std::span<const EntityId> heads(EntityId tail, RelationId r) const {
    return lookup(index_tr_, key(tail, r));
  }

  std::span<const Triple> with_relation(RelationId r) const { return lookup(index_r_, r); }

  /// Triples with head == e or tail == e. Throws for ids outside the dictionary.
  std::span<const Triple> neighbors(EntityId e) const {
    if (!has_entity(e)) throw ValidationError("unknown entity id " + std::to_string(e));
    return lookup(index_e_, e);
  }

  /// Triples whose tail is e.
  std::span<const Triple> incoming(EntityId e) const { return lookup(index_in_, e); }

  /// Entities with at least one incoming triple, ascending.
  const std::vector<EntityId>& targets() const noexcept { return targets_; }

  std::size_t hr_index_size() const noexcept { return index_hr_.size(); }

 private:
  friend KnowledgeGraph load_split(const std::filesystem::path& dir, const std::string& split);

  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  template <typename Map>
  static auto lookup(const Map& m, typename Map::key_type k)
      -> std::span<const typename Map::mapped_type::value_type> {
    auto it = m.find(k);
    if (it == m.end()) return {};
    return it->second;
  }

  void build_indices() {
    for (const auto& t : triples_) {
      index_hr_[key(t.head, t.relation)].push_back(t.tail);
      index_tr_[key(t.tail, t.relation)].push_back(t.head);
      index_r_[t.relation].push_back(t);
      index_e_[t.head].push_back(t);
      if (t.tail != t.head) index_e_[t.tail].push_back(t);
      index_in_[t.tail].push_back(t);
    }
    // triples_ is sorted by (h, r, t) so hr lists and index_r lists are already
    // sorted; the reverse lists are not.
    for (auto& [k, heads] : index_tr_) std::sort(heads.begin(), heads.end());
    for (auto& [k, list] : index_e_) std::sort(list.begin(), list.end());
    for (auto& [k, list] : index_in_) std::sort(list.begin(), list.end());
    targets_.reserve(index_in_.size());
    for (const auto& [e, list] : index_in_) targets_.push_back(e);
    std::sort(targets_.begin(), targets_.end());
  }

  std::vector<Triple> triples_;
  Dictionary entities_;
  Dictionary relations_;
  LoadStats stats_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> index_hr_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> index_tr_;
  std::unordered_map<RelationId, std::vector<Triple>> index_r_;
  std::unordered_map<EntityId, std::vector<Triple>> index_e_;
  std::unordered_map<EntityId, std::vector<Triple>> index_in_;
  std::vector<EntityId> targets_;
};

/// Every triple of `base` plus `extra`, deduplicated. Extra ids absent from
/// the base dictionaries get default labels.
inline KnowledgeGraph merge(const KnowledgeGraph& base, std::span<const Triple> extra) {
  std::vector<Triple> all = base.triples();
  all.insert(all.end(), extra.begin(), extra.end());
  auto g = KnowledgeGraph::from_triples(std::move(all), base.entities(), base.relations());
  return g;
}

inline bool is_subgraph(const KnowledgeGraph& smaller, const KnowledgeGraph& larger) {
  if (smaller.size() > larger.size()) return false;
  return std::includes(larger.triples().begin(), larger.triples().end(),
                       smaller.triples().begin(), smaller.triples().end());
}

namespace detail {

inline std::uint32_t parse_id(std::string_view field, const std::string& file, std::size_t line) {
  field = trim(field);
  if (field.empty() || field.size() > 10)
    throw IoError(file + ":" + std::to_string(line) + ": bad id '" + std::string(field) + "'");
  std::uint64_t v = 0;
  for (char c : field) {
    if (c < '0' || c > '9')
      throw IoError(file + ":" + std::to_string(line) + ": bad id '" + std::string(field) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v > 0xffffffffULL)
    throw IoError(file + ":" + std::to_string(line) + ": id out of range");
  return static_cast<std::uint32_t>(v);
}

inline std::vector<Triple> read_triples(const std::filesystem::path& path, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  const std::string name = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split(body, '\t');
    if (fields.size() != 3)
      throw IoError(name + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields, got " +
                    std::to_string(fields.size()));
    out.push_back({parse_id(fields[0], name, lineno), parse_id(fields[1], name, lineno),
                   parse_id(fields[2], name, lineno)});
  }
  if (stats) stats->lines = lineno;
  return out;
}

inline Dictionary read_labels(const std::filesystem::path& path) {
  Dictionary out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  const std::string name = path.string();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError(name + ":" + std::to_string(lineno) + ": expected id<TAB>label");
    auto id = parse_id(std::string_view(line).substr(0, tab), name, lineno);
    out[id] = std::string(trim(std::string_view(line).substr(tab + 1)));
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names{"train", "valid", "test"};
  return names;
}

/// Loads `<dir>/<split>.txt`. Label files are validated against the ids used by
/// any split file in the directory, and the resulting entity dictionary covers
/// that whole id domain, so every split graph of a dataset shares it.
inline KnowledgeGraph load_split(const std::filesystem::path& dir, const std::string& split) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  LoadStats stats;
  auto triples = detail::read_triples(dir / (split + ".txt"), &stats);

  std::set<EntityId> entity_domain;
  std::set<RelationId> relation_domain;
  auto add_domain = [&](const std::vector<Triple>& ts) {
    for (const auto& t : ts) {
      entity_domain.insert(t.head);
      entity_domain.insert(t.tail);
      relation_domain.insert(t.relation);
    }
  };
  add_domain(triples);
  for (const auto& other : split_names()) {
    if (other == split) continue;
    auto p = dir / (other + ".txt");
    if (fs::exists(p)) add_domain(detail::read_triples(p, nullptr));
  }

  Dictionary entities;
  Dictionary relations;
  for (auto e : entity_domain) entities[e] = "ent_" + std::to_string(e);
  for (auto r : relation_domain) relations[r] = "rel_" + std::to_string(r);
  auto apply_labels = [](const fs::path& path, Dictionary& dict, const char* what) {
    if (!fs::exists(path)) return;
    for (auto& [id, label] : detail::read_labels(path)) {
      auto it = dict.find(id);
      if (it == dict.end())
        throw IoError(path.string() + ": unknown " + what + " id " + std::to_string(id));
      it->second = std::move(label);
    }
  };
  apply_labels(dir / "entity_labels.tsv", entities, "entity");
  apply_labels(dir / "relation_labels.tsv", relations, "relation");

  auto g = KnowledgeGraph::from_triples(std::move(triples), std::move(entities), std::move(relations));
  g.stats_.lines = stats.lines;
  return g;
}

}  // namespace kgchain
