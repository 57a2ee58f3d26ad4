// SPDX-License-Identifier: Apache-2.0
#pragma once
// Grounds query templates against a graph by walking each template backwards
// from a uniformly drawn answer entity. Query i of a batch draws from its own
// stream seeded with base_seed ^ i.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgchain/error.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/query.hpp"
#include "kgchain/util.hpp"

namespace kgchain {

struct SampleOptions {
  std::size_t max_retries = 1000;  // per query
  /// When set, queries whose hard-answer set (vs. this graph) is empty are rejected.
  const KnowledgeGraph* easy_graph = nullptr;
  std::string id_prefix = "q";
  /// Reject groundings already drawn in this call. Small graphs may need false.
  bool unique = true;
};

namespace detail {

class Grounder {
 public:
  Grounder(const KnowledgeGraph& g, Rng& rng) : g_(g), rng_(rng) {}

  // A grounding of `shape` whose answer set contains `target`.
  std::optional<QueryExpr> ground(const QueryExpr& shape, EntityId target) {
    switch (shape.op) {
      case Op::entity:
        return QueryExpr::anchor(target);
      case Op::projection: {
        auto in = g_.incoming(target);
        if (in.empty()) return std::nullopt;
        const auto& t = in[uniform_index(rng_, in.size())];
        auto child = ground(shape.children[0], t.head);
        if (!child) return std::nullopt;
        return QueryExpr::project(t.relation, std::move(*child));
      }
      case Op::conjunction:
        return ground_conjunction(shape, target);
      case Op::disjunction: {
        std::vector<QueryExpr> kids;
        for (std::size_t i = 0; i < shape.children.size(); ++i) {
          EntityId at = target;
          if (i > 0) at = random_target();
          auto k = ground(shape.children[i], at);
          if (!k || std::find(kids.begin(), kids.end(), *k) != kids.end()) return std::nullopt;
          kids.push_back(std::move(*k));
        }
        return QueryExpr::disjunction(std::move(kids));
      }
    }
    return std::nullopt;
  }

 private:
  EntityId random_target() {
    const auto& ts = g_.targets();
    return ts[uniform_index(rng_, ts.size())];
  }

  std::optional<QueryExpr> ground_conjunction(const QueryExpr& shape, EntityId target) {
    std::vector<QueryExpr> kids(shape.children.size());
    std::vector<QueryExpr> positives;
    for (std::size_t i = 0; i < shape.children.size(); ++i) {
      if (shape.negated[i]) continue;
      auto k = ground(shape.children[i], target);
      if (!k || std::find(positives.begin(), positives.end(), *k) != positives.end()) return std::nullopt;
      positives.push_back(*k);
      kids[i] = std::move(*k);
    }
    // Negated branches are grounded from another member of the positive
    // support, so they remove something without removing the target.
    EntitySet support;
    for (std::size_t i = 0; i < positives.size(); ++i) {
      auto s = detail::eval(positives[i], g_);
      support = i == 0 ? std::move(s) : set_intersection(support, s);
    }
    for (std::size_t i = 0; i < shape.children.size(); ++i) {
      if (!shape.negated[i]) continue;
      EntitySet others = set_difference(support, {target});
      if (others.empty()) return std::nullopt;
      auto k = ground(shape.children[i], others[uniform_index(rng_, others.size())]);
      if (!k) return std::nullopt;
      auto removed = detail::eval(*k, g_);
      if (std::binary_search(removed.begin(), removed.end(), target)) return std::nullopt;
      kids[i] = std::move(*k);
    }
    return QueryExpr::conjunction(std::move(kids), shape.negated);
  }

  const KnowledgeGraph& g_;
  Rng& rng_;
};

}  // namespace detail

/// Samples `n` distinct grounded queries of `type` with non-empty answers on
/// `g`. Deterministic for a fixed seed.
inline std::vector<GroundedQuery> sample_queries(const KnowledgeGraph& g, QueryType type, std::size_t n,
                                                 std::uint64_t seed, const SampleOptions& opts = {}) {
  if (type == QueryType::general) throw ValidationError("cannot sample general queries");
  if (g.size() == 0) throw ValidationError("cannot sample from an empty graph");
  const auto shape = template_for(type);
  const auto tag = std::string(type_tag(type));
  std::vector<GroundedQuery> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_rng(seed ^ static_cast<std::uint64_t>(i));
    detail::Grounder grounder(g, rng);
    bool done = false;
    for (std::size_t attempt = 0; attempt < opts.max_retries && !done; ++attempt) {
      const auto& ts = g.targets();
      auto target = ts[uniform_index(rng, ts.size())];
      auto q = grounder.ground(shape, target);
      if (!q || classify(*q) != type) continue;
      auto text = render(*q);
      if (opts.unique && seen.contains(text)) continue;
      auto answers = detail::eval(*q, g);
      if (answers.empty()) continue;
      if (opts.easy_graph) {
        auto easy = detail::eval(*q, *opts.easy_graph);
        if (set_difference(answers, easy).empty()) continue;
      }
      seen.insert(text);
      char buf[24];
      std::snprintf(buf, sizeof buf, "%05zu", i);
      out.push_back(GroundedQuery::make(opts.id_prefix + "-" + tag + "-" + buf, std::move(*q)));
      done = true;
    }
    if (!done)
      throw ValidationError("graph too sparse to sample a " + tag + " query (retry budget of " +
                            std::to_string(opts.max_retries) + " exhausted at query " + std::to_string(i) + ")");
  }
  return out;
}

}  // namespace kgchain
