#ifndef IDXCOST_DEPCOST_HPP
#define IDXCOST_DEPCOST_HPP

// Dependent costs: the per-occurrence costs of one atom, folded into a
// nested ternary expression over conditions on the loop indexes. A simple
// expression a*ik+b turns into the condition describing its image:
//
//   p(0*ik+b) = (ik == b)
//   p(1*ik+b) = (ik >= b)
//   p(a*ik+b) = (ik % a == b mod a && ik >= b)    for a > 1
//
// The recursion classifies the occurrence set by its minimal head expression
// (lexicographic on (a, b)), branches on p(head), and recurses into the
// tails sharing the head versus the rest.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "idxcost/analysis.hpp"
#include "idxcost/syntax.hpp"

namespace idxcost {

struct SimpleCondition {
  enum class Kind { Eq, Ge, ModEq };
  Kind kind;
  IndexId index = 0;
  std::uint64_t bound = 0;    // Eq / Ge: n; ModEq: the >= part
  std::uint64_t modulus = 0;  // ModEq only, > 1
  std::uint64_t residue = 0;  // ModEq only, in [0, modulus)
  bool with_bound = true;     // ModEq: whether the >= part is still present

  static SimpleCondition eq(IndexId k, std::uint64_t n) {
    return {Kind::Eq, k, n, 0, 0, true};
  }
  static SimpleCondition ge(IndexId k, std::uint64_t n) {
    return {Kind::Ge, k, n, 0, 0, true};
  }
  static SimpleCondition mod_eq(IndexId k, std::uint64_t a, std::uint64_t r, std::uint64_t n,
                                bool bounded = true) {
    return {Kind::ModEq, k, n, a, r, bounded};
  }

  bool holds_at(std::uint64_t v) const {
    switch (kind) {
      case Kind::Eq: return v == bound;
      case Kind::Ge: return v >= bound;
      case Kind::ModEq: return v % modulus == residue && (!with_bound || v >= bound);
    }
    return false;
  }

  friend bool operator==(const SimpleCondition& a, const SimpleCondition& b) {
    if (a.kind != b.kind || a.index != b.index) return false;
    switch (a.kind) {
      case Kind::Eq:
      case Kind::Ge: return a.bound == b.bound;
      case Kind::ModEq:
        return a.modulus == b.modulus && a.residue == b.residue &&
               a.with_bound == b.with_bound && (!a.with_bound || a.bound == b.bound);
    }
    return false;
  }
};

inline SimpleCondition cond_of_expr(const SimpleExpr& e) {
  if (e.coeff == 0) return SimpleCondition::eq(e.index, e.offset);
  if (e.coeff == 1) return SimpleCondition::ge(e.index, e.offset);
  return SimpleCondition::mod_eq(e.index, e.coeff, e.offset % e.coeff, e.offset);
}

inline bool cond_holds(const SimpleCondition& p, const ConstantIndexing& c) {
  auto v = c.get(p.index);
  if (!v)
    fail(ErrorKind::UndefinedCondition,
         "condition mentions i" + std::to_string(p.index) + " which has no value");
  return p.holds_at(*v);
}

// ---------------------------------------------------------------------------
// Dependent cost expressions.

struct DependentCost;
using DepCostPtr = std::shared_ptr<const DependentCost>;

struct DependentCost {
  struct Const {
    std::uint64_t value;
  };
  struct Ternary {
    SimpleCondition test;
    DepCostPtr then_k, else_k;
  };
  std::variant<Const, Ternary> node;
};

inline DepCostPtr dep_const(std::uint64_t v) {
  return std::make_shared<DependentCost>(DependentCost{DependentCost::Const{v}});
}
inline DepCostPtr dep_ternary(SimpleCondition test, DepCostPtr a, DepCostPtr b) {
  return std::make_shared<DependentCost>(
      DependentCost{DependentCost::Ternary{std::move(test), std::move(a), std::move(b)}});
}

inline bool dep_equal(const DepCostPtr& a, const DepCostPtr& b) {
  if (a == b) return true;
  if (a->node.index() != b->node.index()) return false;
  if (auto* ca = std::get_if<DependentCost::Const>(&a->node))
    return ca->value == std::get<DependentCost::Const>(b->node).value;
  const auto& ta = std::get<DependentCost::Ternary>(a->node);
  const auto& tb = std::get<DependentCost::Ternary>(b->node);
  return ta.test == tb.test && dep_equal(ta.then_k, tb.then_k) &&
         dep_equal(ta.else_k, tb.else_k);
}

inline std::uint64_t eval_dependent(const DepCostPtr& k, const ConstantIndexing& c) {
  if (auto* n = std::get_if<DependentCost::Const>(&k->node)) return n->value;
  const auto& t = std::get<DependentCost::Ternary>(k->node);
  return cond_holds(t.test, c) ? eval_dependent(t.then_k, c) : eval_dependent(t.else_k, c);
}

// Pretty form matching the instrumentation syntax; an optional symbol table
// renders chosen leaf values as names.
inline std::string cond_text(const SimpleCondition& p) {
  std::string i = "i" + std::to_string(p.index);
  switch (p.kind) {
    case SimpleCondition::Kind::Eq: return i + " == " + std::to_string(p.bound);
    case SimpleCondition::Kind::Ge: return i + " >= " + std::to_string(p.bound);
    case SimpleCondition::Kind::ModEq: {
      std::string mod = i + " % " + std::to_string(p.modulus) + " == " +
                        std::to_string(p.residue);
      if (p.with_bound) mod += " && " + i + " >= " + std::to_string(p.bound);
      return mod;
    }
  }
  return "?";
}

inline std::string dependent_text(
    const DepCostPtr& k, const std::map<std::uint64_t, std::string>& symbols = {}) {
  if (auto* n = std::get_if<DependentCost::Const>(&k->node)) {
    auto it = symbols.find(n->value);
    return it == symbols.end() ? std::to_string(n->value) : it->second;
  }
  const auto& t = std::get<DependentCost::Ternary>(k->node);
  auto arm = [&](const DepCostPtr& sub) {
    std::string text = dependent_text(sub, symbols);
    return std::holds_alternative<DependentCost::Ternary>(sub->node) ? "(" + text + ")" : text;
  };
  return "(" + cond_text(t.test) + ") ? " + arm(t.then_k) + " : " + arm(t.else_k);
}

// ---------------------------------------------------------------------------
// The classification and the folding recursion.

// A set of indexings over one fixed domain of consecutive indexes.
struct IndexingSet {
  IndexId start = 0;
  std::vector<std::vector<SimpleExpr>> members;  // distinct, equal lengths
};

struct Classified {
  enum class Kind { Empty, SingletonEmpty, Split } kind;
  SimpleExpr head;         // Split: minimal first expression
  IndexingSet with_head;   // Split: tails of members starting with head
  IndexingSet without;     // Split: members not starting with head
};

inline Classified classify(const IndexingSet& s) {
  Classified out;
  if (s.members.empty()) {
    out.kind = Classified::Kind::Empty;
    return out;
  }
  if (s.members.front().empty()) {
    out.kind = Classified::Kind::SingletonEmpty;
    return out;
  }
  out.kind = Classified::Kind::Split;
  const SimpleExpr* minimal = nullptr;
  for (const auto& m : s.members)
    if (!minimal || lex_le(m.front(), *minimal)) minimal = &m.front();
  out.head = *minimal;
  out.with_head.start = s.start + 1;
  out.without.start = s.start;
  for (const auto& m : s.members) {
    if (m.front() == out.head)
      out.with_head.members.emplace_back(m.begin() + 1, m.end());
    else
      out.without.members.push_back(m);
  }
  return out;
}

namespace detail {

struct DependentBuilder {
  const CostMap& kappa;
  const CostAtom& atom;

  DepCostPtr build(const IndexingSet& s, std::vector<SimpleExpr>& prefix) {
    Classified c = classify(s);
    switch (c.kind) {
      case Classified::Kind::Empty:
        return dep_const(0);
      case Classified::Kind::SingletonEmpty: {
        IndexedLabel occurrence{atom, Indexing{0, prefix}};
        return dep_const(kappa.at(occurrence));
      }
      case Classified::Kind::Split: {
        prefix.push_back(c.head);
        DepCostPtr then_k = build(c.with_head, prefix);
        prefix.pop_back();
        DepCostPtr else_k = build(c.without, prefix);
        return dep_ternary(cond_of_expr(c.head), std::move(then_k), std::move(else_k));
      }
    }
    fail(ErrorKind::IncompleteCostMap, "unreachable classification");
  }
};

}  // namespace detail

// Folds all occurrences of `atom` in the cost map into one dependent cost.
inline DepCostPtr build_dependent(const CostAtom& atom, const CostMap& kappa) {
  IndexingSet occurrences;
  for (const LabelCost& e : kappa.entries) {
    if (e.label.atom != atom) continue;
    if (!occurrences.members.empty() &&
        e.label.indexing.entries.size() != occurrences.members.front().size())
      fail(ErrorKind::IncompleteCostMap,
           "occurrences of " + atom + " have mismatched indexing domains");
    occurrences.members.push_back(e.label.indexing.entries);
  }
  std::vector<SimpleExpr> prefix;
  return detail::DependentBuilder{kappa, atom}.build(occurrences, prefix);
}

// ---------------------------------------------------------------------------
// Simplification. Walks the ternary tree keeping, per path, the conditions
// already decided; a head that is forced either way by those conditions
// collapses into the surviving branch, an entailed >= part of a compound
// condition is dropped (likewise a congruence the path already settles), and
// equal branches merge after recursion. Conditions are predicates on the
// naturals, eventually periodic, so entailment is decided exactly by
// checking up to the largest constant plus one full period.

namespace detail {

struct PathConstraint {
  SimpleCondition cond;
  bool holds;
};

inline bool satisfies_all(const std::vector<PathConstraint>& path, IndexId index,
                          std::uint64_t v) {
  for (const PathConstraint& pc : path)
    if (pc.cond.index == index && pc.cond.holds_at(v) != pc.holds) return false;
  return true;
}

// Checking up to the largest constant plus one full period decides any
// statement about the values a path permits: beyond that point membership is
// periodic.
inline std::uint64_t check_limit(const std::vector<PathConstraint>& path,
                                 const SimpleCondition& pred) {
  std::uint64_t max_const = std::max<std::uint64_t>(pred.bound, 1);
  std::uint64_t period = pred.kind == SimpleCondition::Kind::ModEq ? pred.modulus : 1;
  for (const PathConstraint& pc : path) {
    if (pc.cond.index != pred.index) continue;
    max_const = std::max(max_const, pc.cond.bound);
    if (pc.cond.kind == SimpleCondition::Kind::ModEq)
      period = std::lcm(period, pc.cond.modulus);
  }
  return max_const + period + 1;
}

// Does every value of the index permitted by the path satisfy pred?
inline bool entails(const std::vector<PathConstraint>& path, const SimpleCondition& pred) {
  std::uint64_t limit = check_limit(path, pred);
  for (std::uint64_t v = 0; v <= limit; ++v)
    if (satisfies_all(path, pred.index, v) && !pred.holds_at(v)) return false;
  return true;
}

// Does no permitted value satisfy pred?
inline bool contradicts(const std::vector<PathConstraint>& path,
                        const SimpleCondition& pred) {
  std::uint64_t limit = check_limit(path, pred);
  for (std::uint64_t v = 0; v <= limit; ++v)
    if (satisfies_all(path, pred.index, v) && pred.holds_at(v)) return false;
  return true;
}

inline DepCostPtr simplify_rec(const DepCostPtr& k, std::vector<PathConstraint>& path) {
  if (std::holds_alternative<DependentCost::Const>(k->node)) return k;
  const auto& t = std::get<DependentCost::Ternary>(k->node);
  if (entails(path, t.test)) return simplify_rec(t.then_k, path);
  if (contradicts(path, t.test)) return simplify_rec(t.else_k, path);

  // The head survives; reduce its parts under the path, then recurse with
  // the original condition recorded (it carries the most information).
  SimpleCondition reduced = t.test;
  if (t.test.kind == SimpleCondition::Kind::ModEq) {
    bool ge_entailed =
        !t.test.with_bound || entails(path, SimpleCondition::ge(t.test.index, t.test.bound));
    bool mod_entailed = entails(
        path, SimpleCondition::mod_eq(t.test.index, t.test.modulus, t.test.residue, 0, false));
    if (mod_entailed && t.test.with_bound) {
      reduced = SimpleCondition::ge(t.test.index, t.test.bound);
    } else if (ge_entailed && t.test.with_bound) {
      reduced = SimpleCondition::mod_eq(t.test.index, t.test.modulus, t.test.residue, 0, false);
    }
  }
  path.push_back({t.test, true});
  DepCostPtr then_k = simplify_rec(t.then_k, path);
  path.back().holds = false;
  DepCostPtr else_k = simplify_rec(t.else_k, path);
  path.pop_back();
  if (dep_equal(then_k, else_k)) return then_k;
  return dep_ternary(reduced, std::move(then_k), std::move(else_k));
}

}  // namespace detail

inline DepCostPtr simplify(const DepCostPtr& k) {
  std::vector<detail::PathConstraint> path;
  return detail::simplify_rec(k, path);
}

}  // namespace idxcost

#endif  // IDXCOST_DEPCOST_HPP
