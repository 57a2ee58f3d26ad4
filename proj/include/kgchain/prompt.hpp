// SPDX-License-Identifier: Apache-2.0
#pragma once
// Text templates for prompts (instruction + context + query) and completions
// (one STEP line per subquery, then FINAL). Both are byte-stable.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgchain/compiler.hpp"
#include "kgchain/executor.hpp"
#include "kgchain/kg_store.hpp"
#include "kgchain/query.hpp"

namespace kgchain {

inline constexpr std::string_view kInstructionVersion = "v1";

inline constexpr std::string_view kInstructionV1 =
    "You are given facts from a knowledge graph and a logical query over it. "
    "Each fact is written as (head, relation, tail). The query is an "
    "s-expression: (e X) is the entity X, (p R Q) follows relation R forward "
    "from the answers of Q, (pi R Q) follows it backward, (and ...) keeps "
    "entities found by every operand except those found by a (not ...) "
    "operand, and (or ...) keeps entities found by any operand. The facts may "
    "be incomplete, so use your own knowledge where they fall short. Solve the "
    "query step by step: write one line per sub-query in the form STEP k: "
    "followed by the operation and the entities it yields, then list every "
    "answer on a final line in the form FINAL: {entity, entity, ...}.";

inline constexpr std::size_t kDefaultStepDisplayCap = 16;

inline std::string render_triple(const Triple& t, const KnowledgeGraph& g) {
  return "(" + g.entity_label(t.head) + ", " + g.relation_label(t.relation) + ", " + g.entity_label(t.tail) + ")";
}

/// Plain-English reading of a query, labels in brackets.
inline std::string paraphrase(const QueryExpr& q, const KnowledgeGraph& g) {
  switch (q.op) {
    case Op::entity:
      return "[" + g.entity_label(q.entity) + "]";
    case Op::projection: {
      const auto& rel = g.relation_label(q.relation);
      auto inner = paraphrase(q.children[0], g);
      if (q.inverse) return "what reaches " + inner + " via [" + rel + "]";
      return "what " + inner + " reaches via [" + rel + "]";
    }
    case Op::conjunction: {
      std::string keep;
      std::string drop;
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        auto& dst = q.negated[i] ? drop : keep;
        if (!dst.empty()) dst += " and ";
        dst += "(" + paraphrase(q.children[i], g) + ")";
      }
      auto out = "both " + keep;
      if (!drop.empty()) out += " but not " + drop;
      return out;
    }
    case Op::disjunction: {
      std::string out = "either ";
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        if (i) out += " or ";
        out += "(" + paraphrase(q.children[i], g) + ")";
      }
      return out;
    }
  }
  return {};
}

struct PromptParts {
  std::string_view description = kInstructionV1;
  std::span<const Triple> context;
  const QueryExpr* query = nullptr;
};

inline constexpr std::string_view kContextHeader = "CONTEXT:";
inline constexpr std::string_view kQueryPrefix = "QUERY: ";

inline std::string render_prompt(const PromptParts& parts, const KnowledgeGraph& g) {
  std::string out(parts.description);
  out += "\n\n";
  out += kContextHeader;
  out += '\n';
  if (parts.context.empty()) out += "(none)\n";
  for (const auto& t : parts.context) out += render_triple(t, g) + "\n";
  out += '\n';
  out += kQueryPrefix;
  out += render(*parts.query);
  out += " means: find " + paraphrase(*parts.query, g) + ".\n";
  return out;
}

inline std::string render_entity_set(const EntitySet& s, const KnowledgeGraph& g, std::size_t cap) {
  std::string out = "{";
  const std::size_t shown = std::min(cap, s.size());
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += g.entity_label(s[i]);
  }
  if (shown < s.size()) {
    if (shown) out += ", ";
    out += "…+" + std::to_string(s.size() - shown) + " more";
  }
  return out + "}";
}

inline constexpr std::string_view kFinalPrefix = "FINAL: ";

/// STEP lines show at most `step_cap` entities each; FINAL is never capped.
inline std::string render_completion(const DecompositionChain& chain, const ChainResult& result,
                                     const KnowledgeGraph& g, std::size_t step_cap = kDefaultStepDisplayCap) {
  std::string out;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) {
    const auto& s = chain.steps[i];
    auto it = result.bindings.find(s.output);
    const EntitySet empty;
    out += render_step(s, i + 1) + " = " +
           render_entity_set(it == result.bindings.end() ? empty : it->second, g, step_cap) + "\n";
  }
  out += kFinalPrefix;
  out += render_entity_set(result.final_answers, g, result.final_answers.size());
  out += '\n';
  return out;
}

}  // namespace kgchain
