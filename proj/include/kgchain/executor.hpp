// SPDX-License-Identifier: Apache-2.0
#pragma once
// Exact set semantics over a KnowledgeGraph:
//   (e x)        -> {x}
//   (p r S)      -> ∪_{s∈S} tails(s, r)      ((pi r S) uses heads)
//   (and ...)    -> ∩ positive operands \ ∪ negated operands
//   (or ...)     -> ∪ operands
// Negation is bounded by the positive support; it never complements against
// the entity universe.

#include <algorithm>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "kgchain/compiler.hpp"
#include "kgchain/error.hpp"
#include "kgchain/kg_store.hpp"
#include "kgchain/query.hpp"

namespace kgchain {

/// Sorted, duplicate-free entity ids.
using EntitySet = std::vector<EntityId>;

inline EntitySet set_union(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline EntitySet set_intersection(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline EntitySet set_difference(const EntitySet& a, const EntitySet& b) {
  EntitySet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline EntitySet project(const EntitySet& sources, RelationId r, bool inverse, const KnowledgeGraph& g) {
  EntitySet out;
  for (auto s : sources) {
    auto next = inverse ? g.heads(s, r) : g.tails(s, r);
    out.insert(out.end(), next.begin(), next.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

inline EntitySet eval(const QueryExpr& q, const KnowledgeGraph& g) {
  switch (q.op) {
    case Op::entity:
      return {q.entity};
    case Op::projection:
      return project(eval(q.children[0], g), q.relation, q.inverse, g);
    case Op::conjunction: {
      EntitySet pos;
      bool first = true;
      EntitySet neg;
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        auto s = eval(q.children[i], g);
        if (q.negated[i]) {
          neg = set_union(neg, s);
        } else if (first) {
          pos = std::move(s);
          first = false;
        } else {
          pos = set_intersection(pos, s);
        }
      }
      return set_difference(pos, neg);
    }
    case Op::disjunction: {
      EntitySet out;
      for (const auto& c : q.children) out = set_union(out, eval(c, g));
      return out;
    }
  }
  return {};
}

}  // namespace detail

inline EntitySet answer(const QueryExpr& q, const KnowledgeGraph& g) {
  validate_query(q);
  check_vocabulary(q, g);
  return detail::eval(q, g);
}

inline EntitySet answer(const ComputationTree& t, const KnowledgeGraph& g) {
  return answer(tree_to_expr(t), g);
}

struct ChainResult {
  std::map<std::string, EntitySet> bindings;
  EntitySet final_answers;
};

inline ChainResult answer_chain(const DecompositionChain& chain, const KnowledgeGraph& g) {
  ChainResult r;
  auto value = [&](const StepInput& in) -> EntitySet {
    if (in.constant) {
      if (!g.has_entity(in.entity)) throw ValidationError("unknown entity id " + std::to_string(in.entity));
      return {in.entity};
    }
    auto it = r.bindings.find(in.variable);
    if (it == r.bindings.end()) throw ValidationError("step references unbound variable " + in.variable);
    return it->second;
  };
  for (const auto& s : chain.steps) {
    EntitySet out;
    switch (s.kind) {
      case StepKind::projection:
        if (!g.has_relation(s.relation))
          throw ValidationError("unknown relation id " + std::to_string(s.relation));
        out = project(value(s.inputs.at(0)), s.relation, s.inverse, g);
        break;
      case StepKind::intersection:
        out = set_intersection(value(s.inputs.at(0)), value(s.inputs.at(1)));
        break;
      case StepKind::union_:
        out = set_union(value(s.inputs.at(0)), value(s.inputs.at(1)));
        break;
      case StepKind::negated_intersection:
        out = set_difference(value(s.inputs.at(0)), value(s.inputs.at(1)));
        break;
    }
    r.bindings[s.output] = std::move(out);
  }
  if (!chain.steps.empty()) r.final_answers = r.bindings[chain.steps.back().output];
  return r;
}

struct AnswerSplit {
  EntitySet easy;
  EntitySet hard;

  EntitySet all() const { return set_union(easy, hard); }
  bool operator==(const AnswerSplit&) const = default;
};

/// easy = answers on `smaller`; hard = answers on `larger` not already easy.
/// Skip the subset check only when nesting is guaranteed by construction.
inline AnswerSplit split_answers(const QueryExpr& q, const KnowledgeGraph& smaller,
                                 const KnowledgeGraph& larger, bool check_nesting = true) {
  if (check_nesting && !is_subgraph(smaller, larger))
    throw ValidationError("split_answers: smaller graph is not contained in larger graph");
  AnswerSplit s;
  s.easy = answer(q, smaller);
  s.hard = set_difference(answer(q, larger), s.easy);
  return s;
}

/// The three nested graphs of the easy/hard answer protocol.
struct SplitGraphs {
  KnowledgeGraph train;
  KnowledgeGraph train_valid;
  KnowledgeGraph train_valid_test;
};

inline SplitGraphs load_splits(const std::filesystem::path& dir) {
  SplitGraphs s;
  s.train = load_split(dir, "train");
  auto valid = load_split(dir, "valid");
  auto test = load_split(dir, "test");
  s.train_valid = merge(s.train, valid.triples());
  s.train_valid_test = merge(s.train_valid, test.triples());
  return s;
}

}  // namespace kgchain
