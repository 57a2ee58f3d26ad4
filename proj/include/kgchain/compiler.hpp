// SPDX-License-Identifier: Apache-2.0
#pragma once
// Binary tree decomposition of a query into an ordered chain of subqueries.
//
//   expr --to_computation_tree--> tree rooted at v?, edges child -> parent
//        --duplicate_union_branches--> shared conjuncts hoisted out of unions
//        --binarize--> every join has two inputs, each input is a named node
//        --reverse_level_traversal--> steps, deepest level first
//
// Subquery count = projection nodes + binary join nodes.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "kgchain/error.hpp"
#include "kgchain/query.hpp"

namespace kgchain {

enum class JoinKind : std::uint8_t { none, intersection, union_ };
enum class EdgeKind : std::uint8_t { projection, identity };

struct TreeEdge {
  EdgeKind kind = EdgeKind::projection;
  RelationId relation = 0;
  bool inverse = false;
  bool negated = false;
  std::size_t child = 0;
  bool operator==(const TreeEdge&) const = default;
};

struct TreeNode {
  bool constant = false;
  EntityId entity = 0;
  std::string name;    // variables only; root is "v?"
  bool fresh = false;  // introduced by binarize; named v<k>'
  JoinKind join = JoinKind::none;
  std::vector<TreeEdge> inputs;
  bool operator==(const TreeNode&) const = default;
};

struct ComputationTree {
  std::vector<TreeNode> nodes;
  std::size_t root = 0;
  bool operator==(const ComputationTree&) const = default;

  const TreeNode& at(std::size_t i) const { return nodes.at(i); }
};

/// A computation tree whose joins all have exactly two identity inputs and
/// whose projection edges always land on a non-join node.
struct BinaryComputationTree {
  ComputationTree tree;
  bool operator==(const BinaryComputationTree&) const = default;
};

namespace detail {

inline void assign_names(ComputationTree& t) {
  std::size_t plain = 0;
  std::size_t primed = 0;
  auto visit = [&](auto&& self, std::size_t idx) -> void {
    for (const auto& e : t.nodes[idx].inputs) self(self, e.child);
    auto& n = t.nodes[idx];
    if (n.constant) return;
    if (idx == t.root)
      n.name = std::string(kFreeVariable);
    else if (n.fresh)
      n.name = "v" + std::to_string(++primed) + "'";
    else
      n.name = "v" + std::to_string(++plain);
  };
  visit(visit, t.root);
}

// Re-lays the arena in post-order so equal trees compare equal.
inline ComputationTree relayout(const ComputationTree& t) {
  ComputationTree out;
  auto visit = [&](auto&& self, std::size_t idx) -> std::size_t {
    TreeNode n = t.nodes[idx];
    for (auto& e : n.inputs) e.child = self(self, e.child);
    out.nodes.push_back(std::move(n));
    return out.nodes.size() - 1;
  };
  out.root = visit(visit, t.root);
  return out;
}

struct TreeBuilder {
  ComputationTree tree;

  std::size_t add(TreeNode n) {
    tree.nodes.push_back(std::move(n));
    return tree.nodes.size() - 1;
  }

  std::size_t build(const QueryExpr& q) {
    switch (q.op) {
      case Op::entity: {
        TreeNode n;
        n.constant = true;
        n.entity = q.entity;
        return add(std::move(n));
      }
      case Op::projection: {
        auto child = build(q.children[0]);
        TreeNode n;
        n.inputs.push_back({EdgeKind::projection, q.relation, q.inverse, false, child});
        return add(std::move(n));
      }
      case Op::conjunction:
      case Op::disjunction: {
        TreeNode n;
        n.join = q.op == Op::conjunction ? JoinKind::intersection : JoinKind::union_;
        for (std::size_t i = 0; i < q.children.size(); ++i) {
          const auto& c = q.children[i];
          if (c.op == Op::projection) {
            // the projection lands directly on the join variable
            auto src = build(c.children[0]);
            n.inputs.push_back({EdgeKind::projection, c.relation, c.inverse, bool(q.negated[i]), src});
          } else {
            auto src = build(c);
            n.inputs.push_back({EdgeKind::identity, 0, false, bool(q.negated[i]), src});
          }
        }
        return add(std::move(n));
      }
    }
    throw ValidationError("bad expression");
  }
};

}  // namespace detail

/// One variable node per projection target and per join; constants are leaves.
/// Projections that feed a join attach straight to the join node.
inline ComputationTree to_computation_tree(const QueryExpr& q) {
  validate_query(q);
  detail::TreeBuilder b;
  b.tree.root = b.build(q);
  detail::assign_names(b.tree);
  return std::move(b.tree);
}

/// Reads the expression back out of a (binary or not) computation tree.
inline QueryExpr tree_to_expr(const ComputationTree& t, std::size_t idx) {
  const auto& n = t.nodes.at(idx);
  if (n.constant) return QueryExpr::anchor(n.entity);
  auto edge_expr = [&](const TreeEdge& e) {
    auto src = tree_to_expr(t, e.child);
    if (e.kind == EdgeKind::projection) return QueryExpr::project(e.relation, std::move(src), e.inverse);
    return src;
  };
  if (n.join == JoinKind::none) {
    if (n.inputs.size() != 1) throw ValidationError("non-join node with " + std::to_string(n.inputs.size()) + " inputs");
    return edge_expr(n.inputs[0]);
  }
  std::vector<QueryExpr> kids;
  std::vector<bool> flags;
  for (const auto& e : n.inputs) {
    kids.push_back(edge_expr(e));
    flags.push_back(e.negated);
  }
  if (n.join == JoinKind::union_) return QueryExpr::disjunction(std::move(kids));
  return QueryExpr::conjunction(std::move(kids), std::move(flags));
}

inline QueryExpr tree_to_expr(const ComputationTree& t) { return tree_to_expr(t, t.root); }

/// Hoists conjuncts shared by several branches of a union out of it:
/// (A ∧ B) ∨ (A ∧ C) becomes A ∧ (B ∨ C). Union-free trees come back unchanged.
inline ComputationTree duplicate_union_branches(const ComputationTree& t) {
  auto expr = tree_to_expr(t);
  auto factored = factor_unions(expr);
  if (factored == expr) return t;
  return to_computation_tree(factored);
}

namespace detail {

struct Binarizer {
  const ComputationTree& src;
  ComputationTree out;

  std::size_t add(TreeNode n) {
    out.nodes.push_back(std::move(n));
    return out.nodes.size() - 1;
  }

  std::size_t copy(std::size_t idx) {
    const auto& n = src.nodes[idx];
    if (n.constant || n.join == JoinKind::none) {
      TreeNode m = n;
      for (auto& e : m.inputs) e.child = copy(e.child);
      return add(std::move(m));
    }
    // Each operand becomes a node reached through an identity edge.
    std::vector<TreeEdge> operands;
    for (const auto& e : n.inputs) {
      auto child = copy(e.child);
      if (e.kind == EdgeKind::projection) {
        TreeNode proj;
        proj.fresh = true;
        proj.inputs.push_back({EdgeKind::projection, e.relation, e.inverse, false, child});
        child = add(std::move(proj));
      }
      operands.push_back({EdgeKind::identity, 0, false, e.negated, child});
    }
    if (operands.size() > 2) {
      std::stable_partition(operands.begin(), operands.end(), [](const TreeEdge& e) { return !e.negated; });
    }
    // left fold: ((o0 ∘ o1) ∘ o2) ... ; the last join is the original node
    TreeEdge acc = operands[0];
    for (std::size_t i = 1; i + 1 < operands.size(); ++i) {
      TreeNode split;
      split.fresh = true;
      split.join = n.join;
      split.inputs = {acc, operands[i]};
      acc = {EdgeKind::identity, 0, false, false, add(std::move(split))};
    }
    TreeNode top;
    top.fresh = n.fresh;
    top.join = n.join;
    top.inputs = {acc, operands.back()};
    return add(std::move(top));
  }
};

}  // namespace detail

/// Splits every n-ary join into a left-associated chain of binary joins.
/// Positive operands come first in declaration order, then negated ones, so a
/// negated operand is always the right input of its join.
inline BinaryComputationTree binarize(const ComputationTree& t) {
  detail::Binarizer b{t, {}};
  b.out.root = b.copy(t.root);
  b.out.nodes[b.out.root].fresh = false;
  auto out = detail::relayout(b.out);
  detail::assign_names(out);
  return {std::move(out)};
}

// ---------------------------------------------------------------------------
// Chains

enum class StepKind : std::uint8_t { projection, intersection, union_, negated_intersection };

inline std::string_view step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::projection: return "projection";
    case StepKind::intersection: return "intersection";
    case StepKind::union_: return "union";
    case StepKind::negated_intersection: return "negated-intersection";
  }
  return "?";
}

struct StepInput {
  bool constant = false;
  EntityId entity = 0;
  std::string variable;
  bool operator==(const StepInput&) const = default;
};

struct SubqueryStep {
  StepKind kind = StepKind::projection;
  std::vector<StepInput> inputs;  // negated-intersection: {kept, removed}
  RelationId relation = 0;        // projection only
  bool inverse = false;
  std::string output;
  bool operator==(const SubqueryStep&) const = default;
};

struct DecompositionChain {
  std::vector<SubqueryStep> steps;
  QueryType source_type = QueryType::general;

  std::size_t subquery_count() const noexcept { return steps.size(); }
  bool operator==(const DecompositionChain&) const = default;
};

/// Emits one step per non-leaf node: deepest level first, left to right within
/// a level. The last step always outputs v?.
inline DecompositionChain reverse_level_traversal(const BinaryComputationTree& bt,
                                                  QueryType source_type = QueryType::general) {
  const auto& t = bt.tree;
  // pre-order positions give the left-to-right order inside a level
  std::vector<std::pair<std::size_t, std::size_t>> depth_order;  // (depth, node)
  std::vector<std::vector<std::size_t>> levels;
  auto visit = [&](auto&& self, std::size_t idx, std::size_t depth) -> void {
    const auto& n = t.nodes[idx];
    if (n.constant) return;
    if (levels.size() <= depth) levels.resize(depth + 1);
    levels[depth].push_back(idx);
    for (const auto& e : n.inputs) self(self, e.child, depth + 1);
  };
  visit(visit, t.root, 0);

  auto input_of = [&](std::size_t idx) {
    const auto& n = t.nodes[idx];
    StepInput in;
    if (n.constant) {
      in.constant = true;
      in.entity = n.entity;
    } else {
      in.variable = n.name;
    }
    return in;
  };

  DecompositionChain chain;
  chain.source_type = source_type;
  for (std::size_t d = levels.size(); d-- > 0;) {
    for (auto idx : levels[d]) {
      const auto& n = t.nodes[idx];
      SubqueryStep s;
      s.output = n.name;
      if (n.join == JoinKind::none) {
        if (n.inputs.size() != 1 || n.inputs[0].kind != EdgeKind::projection)
          throw ValidationError("tree is not binary: node " + n.name + " is not a projection");
        const auto& e = n.inputs[0];
        s.kind = StepKind::projection;
        s.relation = e.relation;
        s.inverse = e.inverse;
        s.inputs.push_back(input_of(e.child));
      } else {
        if (n.inputs.size() != 2)
          throw ValidationError("tree is not binary: join " + n.name + " has " +
                                std::to_string(n.inputs.size()) + " inputs");
        const auto& a = n.inputs[0];
        const auto& b = n.inputs[1];
        if (a.kind != EdgeKind::identity || b.kind != EdgeKind::identity)
          throw ValidationError("tree is not binary: projection edge into join " + n.name);
        if (n.join == JoinKind::union_) {
          s.kind = StepKind::union_;
          s.inputs = {input_of(a.child), input_of(b.child)};
        } else if (!a.negated && !b.negated) {
          s.kind = StepKind::intersection;
          s.inputs = {input_of(a.child), input_of(b.child)};
        } else if (a.negated && b.negated) {
          throw ValidationError("join " + n.name + " has no positive input");
        } else {
          s.kind = StepKind::negated_intersection;
          const auto& kept = a.negated ? b : a;
          const auto& removed = a.negated ? a : b;
          s.inputs = {input_of(kept.child), input_of(removed.child)};
        }
      }
      chain.steps.push_back(std::move(s));
    }
  }
  return chain;
}

/// Full pipeline from expression to chain.
inline DecompositionChain compile(const QueryExpr& q) {
  auto tree = duplicate_union_branches(to_computation_tree(q));
  return reverse_level_traversal(binarize(tree), classify(q));
}

enum class Difficulty : std::uint8_t { easy = 1, medium = 2, hard = 3 };

inline Difficulty difficulty_for_count(std::size_t subqueries) {
  if (subqueries <= 2) return Difficulty::easy;
  if (subqueries == 3) return Difficulty::medium;
  return Difficulty::hard;
}

struct DifficultyScore {
  std::size_t subquery_count = 0;
  Difficulty level = Difficulty::easy;
  bool operator==(const DifficultyScore&) const = default;
};

inline DifficultyScore difficulty(const DecompositionChain& chain) {
  return {chain.subquery_count(), difficulty_for_count(chain.subquery_count())};
}

// ---------------------------------------------------------------------------
// Debug rendering: `STEP <k>: <kind> <inputs> [rel=<id>] -> <var>`

inline std::string render_step_input(const StepInput& in) {
  return in.constant ? "e" + std::to_string(in.entity) : in.variable;
}

inline std::string render_step(const SubqueryStep& s, std::size_t k) {
  std::string out = "STEP " + std::to_string(k) + ": " + std::string(step_kind_name(s.kind)) + " ";
  for (std::size_t i = 0; i < s.inputs.size(); ++i) {
    if (i) out += ',';
    out += render_step_input(s.inputs[i]);
  }
  if (s.kind == StepKind::projection) {
    out += " rel=" + std::to_string(s.relation);
    if (s.inverse) out += " inv";
  }
  out += " -> " + s.output;
  return out;
}

inline std::string render_chain(const DecompositionChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.steps.size(); ++i) out += render_step(chain.steps[i], i + 1) + "\n";
  return out;
}

}  // namespace kgchain
