// SPDX-License-Identifier: Apache-2.0
#pragma once
// Neighbourhood retrieval for prompts.
//
// 1p: every triple touching the anchor, plus triples of the query relation
//     (capped, nearest to the anchor first).
// otherwise: walk the decomposition chain from the anchors. A projection step
//     collects every triple leaving its current frontier along the relation;
//     join steps filter the frontier. A branch whose frontier empties stops
//     contributing.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "kgchain/compiler.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/prompt.hpp"
#include "kgchain/query.hpp"

namespace kgchain {

inline constexpr std::size_t kDefaultTokenBudget = 4096;
inline constexpr std::size_t kDefaultRelationCap = 512;

/// ceil(1.3 * whitespace-separated words), computed in integers.
inline std::size_t estimate_tokens(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (!ws && !in_word) ++words;
    in_word = !ws;
  }
  return (words * 13 + 9) / 10;
}

struct TokenBudget {
  std::size_t max_tokens = kDefaultTokenBudget;
};

struct RetrievalOptions {
  TokenBudget budget;
  std::size_t relation_cap = kDefaultRelationCap;
};

struct RetrievedContext {
  std::vector<Triple> triples;  // by (step, head, relation, tail), no repeats
  std::size_t token_estimate = 0;
  bool truncated = false;
  std::map<std::size_t, std::vector<Triple>> per_step_triples;  // 1-based step index
};

namespace detail {

inline std::vector<Triple> one_hop_context(EntityId anchor, RelationId r, const KnowledgeGraph& g,
                                           std::size_t relation_cap) {
  std::vector<Triple> out;
  if (g.has_entity(anchor)) {
    auto around = g.neighbors(anchor);
    out.assign(around.begin(), around.end());
  }
  auto rel = g.with_relation(r);
  if (!rel.empty()) {
    std::unordered_set<EntityId> near;
    if (g.has_entity(anchor))
      for (const auto& t : g.neighbors(anchor)) near.insert(t.head == anchor ? t.tail : t.head);
    auto distance = [&](const Triple& t) {
      if (t.head == anchor || t.tail == anchor) return 0;
      if (near.contains(t.head) || near.contains(t.tail)) return 1;
      return 2;
    };
    std::vector<Triple> ranked(rel.begin(), rel.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](const Triple& a, const Triple& b) { return distance(a) < distance(b); });
    if (ranked.size() > relation_cap) ranked.resize(relation_cap);
    out.insert(out.end(), ranked.begin(), ranked.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

inline RetrievedContext retrieve(const GroundedQuery& query, const KnowledgeGraph& g,
                                 const RetrievalOptions& opts = {}) {
  RetrievedContext ctx;
  if (query.type == QueryType::p1) {
    const auto& q = query.expr;
    ctx.triples = detail::one_hop_context(q.children[0].entity, q.relation, g, opts.relation_cap);
    ctx.per_step_triples[1] = ctx.triples;
  } else {
    auto chain = compile(query.expr);
    std::map<std::string, EntitySet> frontier;
    auto value = [&](const StepInput& in) -> EntitySet {
      if (in.constant) return g.has_entity(in.entity) ? EntitySet{in.entity} : EntitySet{};
      return frontier[in.variable];
    };
    std::set<Triple> seen;
    for (std::size_t i = 0; i < chain.steps.size(); ++i) {
      const auto& s = chain.steps[i];
      EntitySet out;
      if (s.kind == StepKind::projection) {
        std::vector<Triple> found;
        for (auto e : value(s.inputs[0])) {
          if (s.inverse) {
            for (auto h : g.heads(e, s.relation)) found.push_back({h, s.relation, e});
          } else {
            for (auto t : g.tails(e, s.relation)) found.push_back({e, s.relation, t});
          }
        }
        std::sort(found.begin(), found.end());
        for (const auto& t : found) {
          out.push_back(s.inverse ? t.head : t.tail);
          if (seen.insert(t).second) ctx.per_step_triples[i + 1].push_back(t);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
      } else if (s.kind == StepKind::intersection) {
        out = set_intersection(value(s.inputs[0]), value(s.inputs[1]));
      } else if (s.kind == StepKind::union_) {
        out = set_union(value(s.inputs[0]), value(s.inputs[1]));
      } else {
        out = set_difference(value(s.inputs[0]), value(s.inputs[1]));
      }
      frontier[s.output] = std::move(out);
    }
    for (const auto& [step, ts] : ctx.per_step_triples) ctx.triples.insert(ctx.triples.end(), ts.begin(), ts.end());
  }
  PromptParts parts;
  parts.context = ctx.triples;
  parts.query = &query.expr;
  ctx.token_estimate = estimate_tokens(render_prompt(parts, g));
  ctx.truncated = ctx.token_estimate > opts.budget.max_tokens;
  return ctx;
}

/// Triples that carry some final answer on `g`: walks the chain bindings back
/// from v?, keeping projection triples whose target is still useful. Negated
/// operands only remove answers, so their triples are not on the path.
inline std::set<Triple> inference_path(const DecompositionChain& chain, const ChainResult& result,
                                       const KnowledgeGraph& g) {
  std::map<std::string, EntitySet> useful;
  if (chain.steps.empty()) return {};
  useful[chain.steps.back().output] = result.final_answers;
  std::set<Triple> path;
  auto binding = [&](const StepInput& in) -> EntitySet {
    if (in.constant) return {in.entity};
    return result.bindings.at(in.variable);
  };
  auto mark = [&](const StepInput& in, const EntitySet& s) {
    if (!in.constant) useful[in.variable] = set_union(useful[in.variable], s);
  };
  for (std::size_t i = chain.steps.size(); i-- > 0;) {
    const auto& s = chain.steps[i];
    const EntitySet wanted = useful[s.output];
    if (wanted.empty()) continue;
    switch (s.kind) {
      case StepKind::projection: {
        EntitySet used;
        for (auto e : binding(s.inputs[0])) {
          if (s.inverse) {
            for (auto h : g.heads(e, s.relation))
              if (std::binary_search(wanted.begin(), wanted.end(), h)) {
                path.insert({h, s.relation, e});
                used.push_back(e);
              }
          } else {
            for (auto t : g.tails(e, s.relation))
              if (std::binary_search(wanted.begin(), wanted.end(), t)) {
                path.insert({e, s.relation, t});
                used.push_back(e);
              }
          }
        }
        std::sort(used.begin(), used.end());
        used.erase(std::unique(used.begin(), used.end()), used.end());
        mark(s.inputs[0], used);
        break;
      }
      case StepKind::intersection:
      case StepKind::union_:
        for (const auto& in : s.inputs) mark(in, set_intersection(wanted, binding(in)));
        break;
      case StepKind::negated_intersection:
        mark(s.inputs[0], set_intersection(wanted, binding(s.inputs[0])));
        break;
    }
  }
  return path;
}

/// Share of inference-path triples (on `reference`) present in the context.
/// Single-projection queries count as complete.
inline double completeness(const GroundedQuery& query, const RetrievedContext& ctx, const KnowledgeGraph& reference) {
  auto chain = compile(query.expr);
  auto result = answer_chain(chain, reference);
  if (result.final_answers.empty())
    throw ValidationError("completeness undefined: query " + query.id + " has no answer on the reference graph");
  if (query.type == QueryType::p1) return 1.0;
  auto path = inference_path(chain, result, reference);
  if (path.empty()) return 1.0;
  std::size_t present = 0;
  std::set<Triple> have(ctx.triples.begin(), ctx.triples.end());
  for (const auto& t : path) present += have.contains(t) ? 1 : 0;
  return static_cast<double>(present) / static_cast<double>(path.size());
}

}  // namespace kgchain
