// SPDX-License-Identifier: Apache-2.0
#pragma once
// EFO-1 query expressions with one implicit free variable (the root's output).
//
// Concrete syntax:
//   E := (e <int>) | (p <int> E) | (pi <int> E) | (and E E+) | (or E E+) | (not E)
// `(pi r E)` projects against the edge direction; `(not E)` is only legal as a
// direct operand of `and`, and every `and` keeps at least one positive operand.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgchain/error.hpp"
#include "kgchain/kg_store.hpp"

namespace kgchain {

enum class Op : std::uint8_t { entity, projection, conjunction, disjunction };

struct QueryExpr {
  Op op = Op::entity;
  EntityId entity = 0;
  RelationId relation = 0;
  bool inverse = false;
  std::vector<QueryExpr> children;
  std::vector<bool> negated;  // parallel to children; conjunction only

  static QueryExpr anchor(EntityId e) {
    QueryExpr q;
    q.op = Op::entity;
    q.entity = e;
    return q;
  }

  static QueryExpr project(RelationId r, QueryExpr child, bool inverse = false) {
    QueryExpr q;
    q.op = Op::projection;
    q.relation = r;
    q.inverse = inverse;
    q.children.push_back(std::move(child));
    return q;
  }

  static QueryExpr conjunction(std::vector<QueryExpr> children, std::vector<bool> negated = {}) {
    QueryExpr q;
    q.op = Op::conjunction;
    if (negated.empty()) negated.assign(children.size(), false);
    q.children = std::move(children);
    q.negated = std::move(negated);
    return q;
  }

  static QueryExpr disjunction(std::vector<QueryExpr> children) {
    QueryExpr q;
    q.op = Op::disjunction;
    q.negated.assign(children.size(), false);
    q.children = std::move(children);
    return q;
  }

  bool is_join() const { return op == Op::conjunction || op == Op::disjunction; }

  bool operator==(const QueryExpr&) const = default;
};

// ---------------------------------------------------------------------------
// Validation, rendering, parsing

inline void validate(const QueryExpr& q) {
  switch (q.op) {
    case Op::entity:
      if (!q.children.empty()) throw ValidationError("entity node with children");
      return;
    case Op::projection:
      if (q.children.size() != 1) throw ValidationError("projection needs exactly one operand");
      validate(q.children[0]);
      return;
    case Op::conjunction:
    case Op::disjunction: {
      const char* name = q.op == Op::conjunction ? "and" : "or";
      if (q.children.size() < 2)
        throw ValidationError(std::string(name) + " needs at least two operands");
      if (q.negated.size() != q.children.size())
        throw ValidationError("negation flags do not match operands");
      bool any_positive = false;
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        if (q.negated[i] && q.op == Op::disjunction)
          throw ValidationError("negated operand under or");
        any_positive = any_positive || !q.negated[i];
        validate(q.children[i]);
      }
      if (!any_positive) throw ValidationError("and with every operand negated has no positive support");
      return;
    }
  }
}

/// A query root must produce a variable, so a bare constant is rejected.
inline void validate_query(const QueryExpr& q) {
  validate(q);
  if (q.op == Op::entity) throw ValidationError("query root is a constant; nothing to answer");
}

inline void render_to(const QueryExpr& q, std::string& out) {
  switch (q.op) {
    case Op::entity:
      out += "(e " + std::to_string(q.entity) + ")";
      return;
    case Op::projection:
      out += q.inverse ? "(pi " : "(p ";
      out += std::to_string(q.relation);
      out += ' ';
      render_to(q.children[0], out);
      out += ')';
      return;
    case Op::conjunction:
    case Op::disjunction:
      out += q.op == Op::conjunction ? "(and" : "(or";
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        out += ' ';
        if (q.negated[i]) out += "(not ";
        render_to(q.children[i], out);
        if (q.negated[i]) out += ')';
      }
      out += ')';
      return;
  }
}

inline std::string render(const QueryExpr& q) {
  std::string out;
  render_to(q, out);
  return out;
}

namespace detail {

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : text_(text) {}

  // Parses one expression starting at the current position; returns it and
  // leaves pos_ just past the closing parenthesis.
  QueryExpr expression() {
    auto [q, neg] = operand(false);
    (void)neg;
    return q;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(pos_, "trailing input");
  }

  std::size_t position() const { return pos_; }

 private:
  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size())
      throw ParseError(pos_, std::string("unbalanced parenthesis: expected '") + c + "' before end of input");
    if (text_[pos_] != c)
      throw ParseError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string_view word() {
    skip_ws();
    auto start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ' ' &&
           text_[pos_] != '\t' && text_[pos_] != '\n' && text_[pos_] != '\r')
      ++pos_;
    if (start == pos_) {
      if (pos_ >= text_.size()) throw ParseError(pos_, "unbalanced parenthesis: unexpected end of input");
      throw ParseError(pos_, "expected a symbol");
    }
    return text_.substr(start, pos_ - start);
  }

  std::uint32_t integer() {
    skip_ws();
    auto start = pos_;
    auto w = word();
    std::uint64_t v = 0;
    if (w.size() > 10) throw ParseError(start, "integer out of range");
    for (char c : w) {
      if (c < '0' || c > '9') throw ParseError(start, "expected a non-negative integer");
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (v > 0xffffffffULL) throw ParseError(start, "integer out of range");
    return static_cast<std::uint32_t>(v);
  }

  bool at_close() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unbalanced parenthesis: unexpected end of input");
    return text_[pos_] == ')';
  }

  // Returns the operand and whether it was wrapped in (not ...).
  std::pair<QueryExpr, bool> operand(bool inside_and) {
    skip_ws();
    auto open_at = pos_;
    expect('(');
    auto head_at = pos_;
    auto head = word();
    if (head == "e") {
      auto e = integer();
      expect(')');
      return {QueryExpr::anchor(e), false};
    }
    if (head == "p" || head == "pi") {
      auto r = integer();
      auto child = expression();
      expect(')');
      return {QueryExpr::project(r, std::move(child), head == "pi"), false};
    }
    if (head == "not") {
      if (!inside_and) throw ValidationError("structural error at byte " + std::to_string(open_at) +
                                             ": (not ...) is only allowed directly inside (and ...)");
      auto inner = expression();
      expect(')');
      return {std::move(inner), true};
    }
    if (head == "and" || head == "or") {
      const bool is_and = head == "and";
      std::vector<QueryExpr> children;
      std::vector<bool> negated;
      while (!at_close()) {
        auto [child, neg] = operand(is_and);
        children.push_back(std::move(child));
        negated.push_back(neg);
      }
      expect(')');
      if (children.size() < 2)
        throw ValidationError("structural error at byte " + std::to_string(open_at) + ": (" +
                              std::string(head) + " ...) needs at least two operands");
      if (is_and && std::all_of(negated.begin(), negated.end(), [](bool b) { return b; }))
        throw ValidationError("structural error at byte " + std::to_string(open_at) +
                              ": every operand of (and ...) is negated (empty positive support)");
      return {is_and ? QueryExpr::conjunction(std::move(children), std::move(negated))
                     : QueryExpr::disjunction(std::move(children)),
              false};
    }
    throw ParseError(head_at, "unknown operator '" + std::string(head) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline QueryExpr parse(std::string_view text) {
  detail::QueryParser p(text);
  auto q = p.expression();
  p.expect_end();
  return q;
}

/// Parses one expression at the start of `text` and reports how many bytes it
/// consumed; trailing text is left alone.
inline std::pair<QueryExpr, std::size_t> parse_prefix(std::string_view text) {
  detail::QueryParser p(text);
  auto q = p.expression();
  return {std::move(q), p.position()};
}

// ---------------------------------------------------------------------------
// Query types

enum class QueryType : std::uint8_t {
  p1, p2, p3, i2, i3, pi, ip, u2, up, in2, in3, inp, pin, pni, general
};

inline constexpr std::array<QueryType, 14> kAllTypes{
    QueryType::p1, QueryType::p2, QueryType::p3, QueryType::i2,  QueryType::i3,
    QueryType::pi, QueryType::ip, QueryType::u2, QueryType::up,  QueryType::in2,
    QueryType::in3, QueryType::inp, QueryType::pin, QueryType::pni};

inline std::string_view type_tag(QueryType t) {
  static constexpr std::array<std::string_view, 15> tags{
      "1p", "2p", "3p", "2i", "3i", "pi", "ip", "2u", "up", "2in", "3in", "inp", "pin", "pni", "general"};
  return tags[static_cast<std::size_t>(t)];
}

inline QueryType type_from_tag(std::string_view tag) {
  for (auto t : kAllTypes)
    if (type_tag(t) == tag) return t;
  if (tag == "general") return QueryType::general;
  throw ValidationError("unknown query type '" + std::string(tag) + "'");
}

/// Template shape with all ids zero. Anchors and relations are placeholders.
inline QueryExpr template_for(QueryType t) {
  using Q = QueryExpr;
  auto a = [] { return Q::anchor(0); };
  auto p = [](Q c) { return Q::project(0, std::move(c)); };
  switch (t) {
    case QueryType::p1: return p(a());
    case QueryType::p2: return p(p(a()));
    case QueryType::p3: return p(p(p(a())));
    case QueryType::i2: return Q::conjunction({p(a()), p(a())});
    case QueryType::i3: return Q::conjunction({p(a()), p(a()), p(a())});
    case QueryType::pi: return Q::conjunction({p(p(a())), p(a())});
    case QueryType::ip: return p(Q::conjunction({p(a()), p(a())}));
    case QueryType::u2: return Q::disjunction({p(a()), p(a())});
    case QueryType::up: return p(Q::disjunction({p(a()), p(a())}));
    case QueryType::in2: return Q::conjunction({p(a()), p(a())}, {false, true});
    case QueryType::in3: return Q::conjunction({p(a()), p(a()), p(a())}, {false, false, true});
    case QueryType::inp: return p(Q::conjunction({p(a()), p(a())}, {false, true}));
    case QueryType::pin: return Q::conjunction({p(p(a())), p(a())}, {false, true});
    case QueryType::pni: return Q::conjunction({p(p(a())), p(a())}, {true, false});
    case QueryType::general: break;
  }
  throw ValidationError("no template for general queries");
}

/// Order-insensitive shape signature: constants and relation ids erased,
/// join operands sorted.
inline std::string shape_signature(const QueryExpr& q) {
  switch (q.op) {
    case Op::entity: return "e";
    case Op::projection: return "(p " + shape_signature(q.children[0]) + ")";
    case Op::conjunction:
    case Op::disjunction: {
      std::vector<std::string> parts;
      for (std::size_t i = 0; i < q.children.size(); ++i)
        parts.push_back((q.negated[i] ? "!" : "") + shape_signature(q.children[i]));
      std::sort(parts.begin(), parts.end());
      std::string out = q.op == Op::conjunction ? "(and" : "(or";
      for (auto& s : parts) out += " " + s;
      return out + ")";
    }
  }
  return {};
}

inline QueryType classify(const QueryExpr& q) {
  static const std::map<std::string, QueryType> table = [] {
    std::map<std::string, QueryType> m;
    for (auto t : kAllTypes) m.emplace(shape_signature(template_for(t)), t);
    return m;
  }();
  auto it = table.find(shape_signature(q));
  return it == table.end() ? QueryType::general : it->second;
}

// ---------------------------------------------------------------------------
// Grounded queries

struct GroundedQuery {
  std::string id;
  QueryExpr expr;
  QueryType type = QueryType::general;
  std::vector<EntityId> anchors;
  std::vector<RelationId> relations;

  static GroundedQuery make(std::string id, QueryExpr expr) {
    GroundedQuery g;
    g.id = std::move(id);
    g.type = classify(expr);
    collect(expr, g.anchors, g.relations);
    g.expr = std::move(expr);
    return g;
  }

 private:
  static void collect(const QueryExpr& q, std::vector<EntityId>& anchors,
                      std::vector<RelationId>& relations) {
    if (q.op == Op::entity) anchors.push_back(q.entity);
    if (q.op == Op::projection) relations.push_back(q.relation);
    for (const auto& c : q.children) collect(c, anchors, relations);
  }
};

inline void check_vocabulary(const QueryExpr& q, const KnowledgeGraph& g) {
  if (q.op == Op::entity && !g.has_entity(q.entity))
    throw ValidationError("unknown entity id " + std::to_string(q.entity));
  if (q.op == Op::projection && !g.has_relation(q.relation))
    throw ValidationError("unknown relation id " + std::to_string(q.relation));
  for (const auto& c : q.children) check_vocabulary(c, g);
}

// ---------------------------------------------------------------------------
// Atom lists: q[v?] = ∃v: a1 ∧ ... ∧ an  (or ∨ for DNF)

struct Term {
  bool is_variable = false;
  std::string variable;
  EntityId entity = 0;

  static Term var(std::string name) { return {true, std::move(name), 0}; }
  static Term constant(EntityId e) { return {false, {}, e}; }
  bool operator==(const Term&) const = default;
};

struct Atom {
  RelationId relation = 0;
  bool negated = false;
  Term subject;
  Term object;
  bool operator==(const Atom&) const = default;
};

enum class Connective : std::uint8_t { cnf, dnf };

struct AtomList {
  std::vector<Atom> atoms;
  Connective connective = Connective::cnf;
};

inline constexpr std::string_view kFreeVariable = "v?";

namespace detail {

struct AtomTreeBuilder {
  const AtomList& list;
  std::map<std::string, std::vector<std::size_t>> incident;  // variable -> atom indices

  QueryExpr build(const std::string& var, std::optional<std::size_t> via) {
    std::vector<QueryExpr> children;
    std::vector<bool> negated;
    for (auto idx : incident[var]) {
      if (via && idx == *via) continue;
      const Atom& a = list.atoms[idx];
      const bool points_here = a.object.is_variable && a.object.variable == var;
      const Term& other = points_here ? a.subject : a.object;
      QueryExpr source = other.is_variable ? build(other.variable, idx) : QueryExpr::anchor(other.entity);
      // r(other, var) follows the edge; r(var, other) has to be walked backwards.
      children.push_back(QueryExpr::project(a.relation, std::move(source), !points_here));
      negated.push_back(a.negated);
    }
    if (children.empty()) throw ValidationError("variable " + var + " is not constrained by any atom");
    if (children.size() == 1) {
      if (negated[0]) throw ValidationError("variable " + var + " has only negated support");
      return std::move(children[0]);
    }
    if (list.connective == Connective::dnf) {
      if (std::any_of(negated.begin(), negated.end(), [](bool b) { return b; }))
        throw ValidationError("negated atom in a disjunctive atom list");
      return QueryExpr::disjunction(std::move(children));
    }
    if (std::all_of(negated.begin(), negated.end(), [](bool b) { return b; }))
      throw ValidationError("variable " + var + " has only negated support");
    return QueryExpr::conjunction(std::move(children), std::move(negated));
  }
};

}  // namespace detail

/// Builds the expression tree rooted at v?. Variable nodes are shared across
/// atoms; every constant occurrence is its own leaf. Atoms whose direction
/// points away from the root become inverse projections.
inline QueryExpr from_atom_list(const AtomList& list) {
  if (list.atoms.empty()) throw ValidationError("empty atom list");
  detail::AtomTreeBuilder b{list, {}};
  std::set<std::string> variables;
  std::size_t var_edges = 0;
  for (std::size_t i = 0; i < list.atoms.size(); ++i) {
    const auto& a = list.atoms[i];
    if (!a.subject.is_variable && !a.object.is_variable)
      throw ValidationError("atom " + std::to_string(i) + " has no variable");
    if (a.subject.is_variable && a.object.is_variable) {
      if (a.subject.variable == a.object.variable)
        throw ValidationError("query must conform be in a tree-shape: self loop on " + a.subject.variable);
      ++var_edges;
    }
    for (const Term* t : {&a.subject, &a.object}) {
      if (!t->is_variable) continue;
      variables.insert(t->variable);
      b.incident[t->variable].push_back(i);
    }
  }
  if (!variables.contains(std::string(kFreeVariable)))
    throw ValidationError("atom list has no free variable v?");
  if (var_edges >= variables.size())
    throw ValidationError("query must conform be in a tree-shape: cyclic variable dependencies");

  // Connectivity: with |E| < |V| a connected graph is a tree.
  std::set<std::string> seen{std::string(kFreeVariable)};
  std::vector<std::string> stack{std::string(kFreeVariable)};
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto idx : b.incident[v]) {
      const auto& a = list.atoms[idx];
      for (const Term* t : {&a.subject, &a.object})
        if (t->is_variable && seen.insert(t->variable).second) stack.push_back(t->variable);
    }
  }
  if (seen.size() != variables.size())
    throw ValidationError("disconnected atoms: not every variable reaches v?");
  if (var_edges + 1 != variables.size())
    throw ValidationError("query must conform be in a tree-shape: cyclic variable dependencies");

  return b.build(std::string(kFreeVariable), std::nullopt);
}

namespace detail {

struct AtomFlattener {
  AtomList out;
  std::size_t next_var = 1;
  std::optional<Connective> connective;

  void require(Connective c) {
    if (connective && *connective != c)
      throw ValidationError("query mixes and/or; it has no single atom-list form");
    connective = c;
  }

  Term term_for(const QueryExpr& q) {
    if (q.op == Op::entity) return Term::constant(q.entity);
    Term t = Term::var("v" + std::to_string(next_var++));
    expand(q, t);
    return t;
  }

  void emit(const QueryExpr& proj, const Term& target, bool negated) {
    if (proj.op != Op::projection)
      throw ValidationError("join operand is not a projection; no atom form");
    Term source = term_for(proj.children[0]);
    Atom a{proj.relation, negated, source, target};
    if (proj.inverse) std::swap(a.subject, a.object);
    out.atoms.push_back(std::move(a));
  }

  void expand(const QueryExpr& q, const Term& var) {
    switch (q.op) {
      case Op::entity:
        throw ValidationError("constant in variable position; no atom form");
      case Op::projection:
        emit(q, var, false);
        return;
      case Op::conjunction:
      case Op::disjunction:
        require(q.op == Op::conjunction ? Connective::cnf : Connective::dnf);
        for (std::size_t i = 0; i < q.children.size(); ++i) {
          const auto& c = q.children[i];
          if (c.op == q.op && !q.negated[i]) {
            expand(c, var);
          } else {
            emit(c, var, q.negated[i]);
          }
        }
        return;
    }
  }
};

}  // namespace detail

/// Inverse of from_atom_list for queries whose joins all use one connective
/// and whose join operands are projections.
inline AtomList to_atom_list(const QueryExpr& q) {
  detail::AtomFlattener f;
  f.expand(q, Term::var(std::string(kFreeVariable)));
  f.out.connective = f.connective.value_or(Connective::cnf);
  return std::move(f.out);
}

// ---------------------------------------------------------------------------
// Normal forms

namespace detail {

inline std::vector<QueryExpr> disjuncts(const QueryExpr& q) {
  switch (q.op) {
    case Op::entity:
      return {q};
    case Op::projection: {
      std::vector<QueryExpr> out;
      for (auto& d : disjuncts(q.children[0])) out.push_back(QueryExpr::project(q.relation, std::move(d), q.inverse));
      return out;
    }
    case Op::disjunction: {
      std::vector<QueryExpr> out;
      for (const auto& c : q.children)
        for (auto& d : disjuncts(c)) out.push_back(std::move(d));
      return out;
    }
    case Op::conjunction: {
      // positives: cartesian product; a negated union becomes several
      // negated operands (a \ (x ∪ y) = a \ x \ y).
      std::vector<std::vector<QueryExpr>> combos{{}};
      std::vector<QueryExpr> negs;
      for (std::size_t i = 0; i < q.children.size(); ++i) {
        auto ds = disjuncts(q.children[i]);
        if (q.negated[i]) {
          for (auto& d : ds) negs.push_back(std::move(d));
          continue;
        }
        std::vector<std::vector<QueryExpr>> next;
        for (const auto& partial : combos)
          for (const auto& d : ds) {
            auto extended = partial;
            extended.push_back(d);
            next.push_back(std::move(extended));
          }
        combos = std::move(next);
      }
      std::vector<QueryExpr> out;
      for (auto& pos : combos) {
        std::vector<bool> flags(pos.size(), false);
        for (const auto& n : negs) {
          pos.push_back(n);
          flags.push_back(true);
        }
        out.push_back(QueryExpr::conjunction(std::move(pos), std::move(flags)));
      }
      return out;
    }
  }
  return {};
}

inline QueryExpr flatten_and(std::vector<QueryExpr> children, std::vector<bool> negated) {
  std::vector<QueryExpr> kids;
  std::vector<bool> flags;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (!negated[i] && children[i].op == Op::conjunction) {
      for (std::size_t j = 0; j < children[i].children.size(); ++j) {
        kids.push_back(children[i].children[j]);
        flags.push_back(children[i].negated[j]);
      }
    } else {
      kids.push_back(std::move(children[i]));
      flags.push_back(negated[i]);
    }
  }
  return QueryExpr::conjunction(std::move(kids), std::move(flags));
}

inline QueryExpr cnf(const QueryExpr& q);

inline QueryExpr cnf_or(std::vector<QueryExpr> kids) {
  // kids are already normalized; flatten nested unions.
  std::vector<QueryExpr> flat;
  for (auto& k : kids) {
    if (k.op == Op::disjunction)
      for (auto& c : k.children) flat.push_back(c);
    else
      flat.push_back(std::move(k));
  }
  auto it = std::find_if(flat.begin(), flat.end(), [](const QueryExpr& k) { return k.op == Op::conjunction; });
  if (it == flat.end()) return QueryExpr::disjunction(std::move(flat));
  QueryExpr conj = std::move(*it);
  flat.erase(it);
  QueryExpr rest = flat.size() == 1 ? std::move(flat[0]) : QueryExpr::disjunction(std::move(flat));
  // (∩P \ ∪N) ∪ c = ∩(p ∪ c) \ ∪(n \ c)
  std::vector<QueryExpr> clauses;
  std::vector<bool> flags;
  for (std::size_t i = 0; i < conj.children.size(); ++i) {
    if (!conj.negated[i]) {
      clauses.push_back(cnf_or({conj.children[i], rest}));
      flags.push_back(false);
    } else {
      clauses.push_back(QueryExpr::conjunction({conj.children[i], rest}, {false, true}));
      flags.push_back(true);
    }
  }
  return flatten_and(std::move(clauses), std::move(flags));
}

inline QueryExpr cnf(const QueryExpr& q) {
  switch (q.op) {
    case Op::entity:
      return q;
    case Op::projection:
      return QueryExpr::project(q.relation, cnf(q.children[0]), q.inverse);
    case Op::conjunction: {
      std::vector<QueryExpr> kids;
      for (const auto& c : q.children) kids.push_back(cnf(c));
      return flatten_and(std::move(kids), q.negated);
    }
    case Op::disjunction: {
      std::vector<QueryExpr> kids;
      for (const auto& c : q.children) kids.push_back(cnf(c));
      return cnf_or(std::move(kids));
    }
  }
  return q;
}

}  // namespace detail

/// Lifts every union to the root: the result is either union-free or a single
/// union of union-free disjuncts. Union-free input comes back unchanged.
inline QueryExpr to_dnf(const QueryExpr& q) {
  auto ds = detail::disjuncts(q);
  if (ds.size() == 1) return std::move(ds[0]);
  return QueryExpr::disjunction(std::move(ds));
}

/// No conjunction sits directly under a union at any level; nested positive
/// conjunctions are flattened.
inline QueryExpr to_cnf(const QueryExpr& q) { return detail::cnf(q); }

// ---------------------------------------------------------------------------
// Union factoring: (A ∧ B) ∨ (A ∧ C) => A ∧ (B ∨ C)

namespace detail {

struct Operand {
  QueryExpr expr;
  bool negated = false;
  bool operator==(const Operand&) const = default;
};

inline std::vector<Operand> operands(const QueryExpr& conj) {
  std::vector<Operand> out;
  for (std::size_t i = 0; i < conj.children.size(); ++i) out.push_back({conj.children[i], conj.negated[i]});
  return out;
}

inline bool contains(const std::vector<Operand>& v, const Operand& o) {
  return std::find(v.begin(), v.end(), o) != v.end();
}

// Factors the conjunctions in `group` (size >= 2) by their common operands.
// Returns nullopt when some residual would be purely negated.
inline std::optional<QueryExpr> factor_group(const std::vector<QueryExpr>& group) {
  auto common = operands(group[0]);
  for (std::size_t g = 1; g < group.size(); ++g) {
    auto ops = operands(group[g]);
    std::erase_if(common, [&](const Operand& o) { return !contains(ops, o); });
  }
  if (common.empty()) return std::nullopt;
  std::vector<QueryExpr> residuals;
  for (const auto& conj : group) {
    std::vector<QueryExpr> kids;
    std::vector<bool> flags;
    std::vector<Operand> used;
    for (auto& o : operands(conj)) {
      // multiset removal: drop one copy per common occurrence
      if (contains(common, o) && std::count(used.begin(), used.end(), o) <
                                     std::count(common.begin(), common.end(), o)) {
        used.push_back(o);
        continue;
      }
      kids.push_back(o.expr);
      flags.push_back(o.negated);
    }
    if (kids.empty()) {
      // absorption: A ∨ (A ∧ C) = A
      std::vector<QueryExpr> ckids;
      std::vector<bool> cflags;
      for (auto& o : common) {
        ckids.push_back(o.expr);
        cflags.push_back(o.negated);
      }
      if (ckids.size() == 1) return ckids[0];
      return QueryExpr::conjunction(std::move(ckids), std::move(cflags));
    }
    if (std::all_of(flags.begin(), flags.end(), [](bool b) { return b; })) return std::nullopt;
    residuals.push_back(kids.size() == 1 ? std::move(kids[0])
                                         : QueryExpr::conjunction(std::move(kids), std::move(flags)));
  }
  std::vector<QueryExpr> kids;
  std::vector<bool> flags;
  for (auto& o : common) {
    kids.push_back(std::move(o.expr));
    flags.push_back(o.negated);
  }
  kids.push_back(QueryExpr::disjunction(std::move(residuals)));
  flags.push_back(false);
  return QueryExpr::conjunction(std::move(kids), std::move(flags));
}

}  // namespace detail

/// Applies the distributive law bottom-up. Within one union, the operand shared
/// by the most conjunctive branches (first occurrence wins ties) is factored
/// first; repeats until no operand is shared by two branches.
inline QueryExpr factor_unions(const QueryExpr& q) {
  if (q.op == Op::entity) return q;
  QueryExpr out = q;
  for (auto& c : out.children) c = factor_unions(c);
  if (out.op != Op::disjunction) return out;

  std::vector<QueryExpr> branches = out.children;
  std::set<std::string> blocked;  // operands whose factoring is not representable
  for (;;) {
    // count branches per operand
    std::vector<std::pair<detail::Operand, std::size_t>> counts;
    for (const auto& b : branches) {
      if (b.op != Op::conjunction) continue;
      std::vector<detail::Operand> seen;
      for (auto& o : detail::operands(b)) {
        if (detail::contains(seen, o)) continue;
        seen.push_back(o);
        auto it = std::find_if(counts.begin(), counts.end(), [&](auto& p) { return p.first == o; });
        if (it == counts.end())
          counts.push_back({o, 1});
        else
          ++it->second;
      }
    }
    const detail::Operand* best = nullptr;
    std::size_t best_count = 1;
    for (const auto& [o, n] : counts) {
      std::string key = (o.negated ? "!" : "") + render(o.expr);
      if (n > best_count && !blocked.contains(key)) {
        best = &o;
        best_count = n;
      }
    }
    if (!best) break;
    std::vector<QueryExpr> group;
    std::vector<QueryExpr> rest;
    std::size_t insert_at = branches.size();
    for (std::size_t i = 0; i < branches.size(); ++i) {
      const auto& b = branches[i];
      if (b.op == Op::conjunction && detail::contains(detail::operands(b), *best)) {
        if (insert_at == branches.size()) insert_at = rest.size();
        group.push_back(b);
      } else {
        rest.push_back(b);
      }
    }
    auto factored = detail::factor_group(group);
    if (!factored) {
      blocked.insert((best->negated ? "!" : "") + render(best->expr));
      continue;
    }
    rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(insert_at), factor_unions(*factored));
    branches = std::move(rest);
    if (branches.size() == 1) return std::move(branches[0]);
  }
  return QueryExpr::disjunction(std::move(branches));
}

}  // namespace kgchain
