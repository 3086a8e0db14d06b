#ifndef IDXCOST_INSTRUMENT_HPP
#define IDXCOST_INSTRUMENT_HPP

// Instrumentation rewrites a labelled program into plain executable code
// that accounts for its own cost in the variable __cost. The plain variant
// charges one constant per atom. The indexed variant internalizes the loop
// indexes as variables __idx0, __idx1, ... and charges each label its
// dependent cost rendered as a ternary/modulo expression over them:
//
//   label: S            ->  __cost := __cost + <cost>; S
//   @ik while b do S    ->  __idxk := 0; while b do { S; __idxk := __idxk + 1 }

#include <map>
#include <string>

#include "idxcost/depcost.hpp"
#include "idxcost/syntax.hpp"

namespace idxcost {

struct InstrumentedProgram {
  StmtPtr program;  // plain: no labels, no indexed loops
  Ident cost_var;
  std::vector<Ident> index_vars;
};

namespace detail {

inline Ident index_var(IndexId k) { return kIndexVarPrefix + std::to_string(k); }

inline ExprPtr cond_expr(const SimpleCondition& p) {
  ExprPtr ix = var(index_var(p.index));
  switch (p.kind) {
    case SimpleCondition::Kind::Eq:
      return bin(BinOp::Eq, ix, lit(static_cast<std::int64_t>(p.bound)));
    case SimpleCondition::Kind::Ge:
      // i >= n rendered with the available operators as n <= i.
      return bin(BinOp::Le, lit(static_cast<std::int64_t>(p.bound)), ix);
    case SimpleCondition::Kind::ModEq: {
      ExprPtr mod = bin(BinOp::Eq,
                        bin(BinOp::Mod, ix, lit(static_cast<std::int64_t>(p.modulus))),
                        lit(static_cast<std::int64_t>(p.residue)));
      if (!p.with_bound) return mod;
      return bin(BinOp::And, mod,
                 bin(BinOp::Le, lit(static_cast<std::int64_t>(p.bound)), ix));
    }
  }
  fail(ErrorKind::UndefinedCondition, "unreachable condition kind");
}

inline ExprPtr dependent_expr(const DepCostPtr& k) {
  if (auto* c = std::get_if<DependentCost::Const>(&k->node))
    return lit(static_cast<std::int64_t>(c->value));
  const auto& t = std::get<DependentCost::Ternary>(k->node);
  return cond(cond_expr(t.test), dependent_expr(t.then_k), dependent_expr(t.else_k));
}

inline StmtPtr add_cost(const ExprPtr& amount) {
  return assign(kCostVar, bin(BinOp::Add, var(kCostVar), amount));
}

inline StmtPtr instrument_plain_rec(const StmtPtr& s,
                                    const std::map<CostAtom, std::uint64_t>& costs) {
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node))
    return seq(instrument_plain_rec(sq->first, costs), instrument_plain_rec(sq->second, costs));
  if (auto* i = std::get_if<Stmt::If>(&s->node))
    return if_(i->guard, instrument_plain_rec(i->then_branch, costs),
               instrument_plain_rec(i->else_branch, costs));
  if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    if (w->index)
      fail(ErrorKind::NotPlainLabelled, "plain instrumentation on an indexed loop");
    return while_(w->guard, instrument_plain_rec(w->body, costs));
  }
  const auto& l = std::get<Stmt::Labelled>(s->node);
  if (!l.label.indexing.empty())
    fail(ErrorKind::NotPlainLabelled,
         "plain instrumentation on indexed label " + label_text(l.label));
  auto it = costs.find(l.label.atom);
  if (it == costs.end())
    fail(ErrorKind::IncompleteCostMap, "no cost for atom " + l.label.atom);
  return seq(add_cost(lit(static_cast<std::int64_t>(it->second))),
             instrument_plain_rec(l.body, costs));
}

inline StmtPtr instrument_indexed_rec(const StmtPtr& s,
                                      const std::map<CostAtom, DepCostPtr>& costs,
                                      std::vector<Ident>& index_vars) {
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    StmtPtr first = instrument_indexed_rec(sq->first, costs, index_vars);
    return seq(first, instrument_indexed_rec(sq->second, costs, index_vars));
  }
  if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    StmtPtr then_branch = instrument_indexed_rec(i->then_branch, costs, index_vars);
    return if_(i->guard, then_branch, instrument_indexed_rec(i->else_branch, costs, index_vars));
  }
  if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    StmtPtr body = instrument_indexed_rec(w->body, costs, index_vars);
    if (!w->index) return while_(w->guard, body);
    Ident ix = index_var(*w->index);
    bool seen = false;
    for (const Ident& v : index_vars) seen = seen || v == ix;
    if (!seen) index_vars.push_back(ix);
    return seq(assign(ix, lit(0)),
               while_(w->guard, seq(body, assign(ix, bin(BinOp::Add, var(ix), lit(1))))));
  }
  const auto& l = std::get<Stmt::Labelled>(s->node);
  for (const SimpleExpr& e : l.label.indexing.entries)
    if (!e.is_identity())
      fail(ErrorKind::NotSourceLabelled,
           "label " + label_text(l.label) + " does not carry an identity indexing");
  auto it = costs.find(l.label.atom);
  if (it == costs.end())
    fail(ErrorKind::IncompleteCostMap, "no cost for atom " + l.label.atom);
  return seq(add_cost(dependent_expr(it->second)),
             instrument_indexed_rec(l.body, costs, index_vars));
}

}  // namespace detail

// Plainly labelled input (all indexings empty), one constant per atom.
inline InstrumentedProgram instrument_plain(const StmtPtr& s,
                                            const std::map<CostAtom, std::uint64_t>& costs) {
  return {detail::instrument_plain_rec(s, costs), kCostVar, {}};
}

// Source-labelled input (identity indexings, as produced by label_indexed),
// one dependent cost per atom.
inline InstrumentedProgram instrument_indexed(const StmtPtr& s,
                                              const std::map<CostAtom, DepCostPtr>& costs) {
  std::vector<Ident> index_vars;
  StmtPtr program = detail::instrument_indexed_rec(s, costs, index_vars);
  return {std::move(program), kCostVar, std::move(index_vars)};
}

}  // namespace idxcost

#endif  // IDXCOST_INSTRUMENT_HPP
