#ifndef IDXCOST_SYNTAX_HPP
#define IDXCOST_SYNTAX_HPP

#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace idxcost {

enum class ErrorKind {
  Parse,
  InvalidComposition,
  InvalidComparison,
  IndexOutOfScope,
  Overflow,
  DivisionByZero,
  UndefinedEvaluation,
  UndefinedCondition,
  AlreadyLabelled,
  NotPlainLabelled,
  NotSourceLabelled,
  BadPath,
  InvalidFactor,
  FuelExhausted,
  StuckEvaluation,
  SoundnessViolation,
  PrecisenessViolation,
  IncompleteCostMap,
  Usage,
};

struct Error : std::runtime_error {
  ErrorKind kind;
  Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

// Program variables are plain strings; validity (identifier shape, reserved
// names) is enforced by the parser.
using Ident = std::string;

inline const char* kCostVar = "__cost";
inline const char* kIndexVarPrefix = "__idx";

inline bool is_reserved_ident(const std::string& name) {
  if (name == kCostVar) return true;
  const std::string p = kIndexVarPrefix;
  if (name.size() > p.size() && name.compare(0, p.size(), p) == 0) {
    for (std::size_t i = p.size(); i < name.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Checked arithmetic. Values are signed 64-bit; overflow is an error, never
// wraparound. Loop-index arithmetic lives in the naturals (uint64).

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::Overflow, "integer overflow in +");
  return r;
}
inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) fail(ErrorKind::Overflow, "integer overflow in -");
  return r;
}
inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::Overflow, "integer overflow in *");
  return r;
}
inline std::uint64_t checked_add_nat(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::Overflow, "natural overflow in +");
  return r;
}
inline std::uint64_t checked_mul_nat(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::Overflow, "natural overflow in *");
  return r;
}

// ---------------------------------------------------------------------------
// Loop indexes and the affine-expression algebra.

// The subscript k of a formal loop index i_k.
using IndexId = std::uint32_t;

// An affine map coeff*i_k + offset on a single formal index. Coefficients are
// naturals; a constant c is encoded as 0*i_k + c, the identity as 1*i_k + 0.
struct SimpleExpr {
  std::uint64_t coeff = 0;
  std::uint64_t offset = 0;
  IndexId index = 0;

  bool is_constant() const { return coeff == 0; }
  bool is_identity() const { return coeff == 1 && offset == 0; }

  static SimpleExpr constant(IndexId k, std::uint64_t c) { return {0, c, k}; }
  static SimpleExpr identity(IndexId k) { return {1, 0, k}; }
  static SimpleExpr affine(std::uint64_t a, IndexId k, std::uint64_t b) { return {a, b, k}; }

  friend bool operator==(const SimpleExpr& a, const SimpleExpr& b) {
    return a.coeff == b.coeff && a.offset == b.offset && a.index == b.index;
  }
};

// Substitution of e2 into the index of e1: (a1*a2)*i_k + (a1*b2 + b1).
inline SimpleExpr compose_simple(const SimpleExpr& e1, const SimpleExpr& e2) {
  if (e1.index != e2.index)
    fail(ErrorKind::InvalidComposition,
         "cannot compose expressions on i" + std::to_string(e1.index) + " and i" +
             std::to_string(e2.index));
  return {checked_mul_nat(e1.coeff, e2.coeff),
          checked_add_nat(checked_mul_nat(e1.coeff, e2.offset), e1.offset), e1.index};
}

inline std::uint64_t eval_simple(const SimpleExpr& e, std::uint64_t c) {
  return checked_add_nat(checked_mul_nat(e.coeff, c), e.offset);
}

// Lexicographic order on (coeff, offset); total for expressions on one index.
inline bool lex_le(const SimpleExpr& e1, const SimpleExpr& e2) {
  if (e1.index != e2.index)
    fail(ErrorKind::InvalidComparison, "cannot order expressions on distinct indexes");
  return e1.coeff < e2.coeff || (e1.coeff == e2.coeff && e1.offset <= e2.offset);
}

// An indexing maps the consecutive formal indexes i_start, i_start+1, ... to
// simple expressions, each on the index it maps. Labelled programs only
// carry indexings starting at i_0; nonzero starts appear as suffixes during
// the dependent-cost classification.
struct Indexing {
  IndexId start = 0;
  std::vector<SimpleExpr> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  bool contains(IndexId k) const { return k >= start && k < start + entries.size(); }
  const SimpleExpr& at(IndexId k) const { return entries[k - start]; }

  static Indexing identity(std::size_t depth) {
    Indexing ix;
    ix.entries.reserve(depth);
    for (std::size_t k = 0; k < depth; ++k)
      ix.entries.push_back(SimpleExpr::identity(static_cast<IndexId>(k)));
    return ix;
  }

  friend bool operator==(const Indexing& a, const Indexing& b) {
    return a.start == b.start && a.entries == b.entries;
  }
};

using CostAtom = std::string;

// A cost label together with an indexing; the bare label is the atom.
struct IndexedLabel {
  CostAtom atom;
  Indexing indexing;

  friend bool operator==(const IndexedLabel& a, const IndexedLabel& b) {
    return a.atom == b.atom && a.indexing == b.indexing;
  }
};

// Runtime snapshot of loop-index values.
struct ConstantIndexing {
  std::map<IndexId, std::uint64_t> values;

  std::optional<std::uint64_t> get(IndexId k) const {
    auto it = values.find(k);
    if (it == values.end()) return std::nullopt;
    return it->second;
  }
  void reset(IndexId k) { values[k] = 0; }
  void increment(IndexId k) {
    auto it = values.find(k);
    if (it == values.end()) fail(ErrorKind::UndefinedEvaluation, "increment of unset index");
    it->second = checked_add_nat(it->second, 1);
  }

  friend bool operator==(const ConstantIndexing& a, const ConstantIndexing& b) {
    return a.values == b.values;
  }
};

// Does this static occurrence cover the given constant label, i.e. is there
// an assignment of index values under which it evaluates to it? Decided
// entrywise by membership in the affine image.
inline bool occurrence_covers(const IndexedLabel& occurrence, const IndexedLabel& emitted) {
  if (occurrence.atom != emitted.atom) return false;
  const Indexing& a = occurrence.indexing;
  const Indexing& b = emitted.indexing;
  if (a.start != b.start || a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const SimpleExpr& e = a.entries[i];
    std::uint64_t v = b.entries[i].offset;
    if (e.coeff == 0) {
      if (e.offset != v) return false;
    } else if (v < e.offset || (v - e.offset) % e.coeff != 0) {
      return false;
    }
  }
  return true;
}

// Reindexing at i_k: the entry for i_k becomes entry∘f, everything else is
// untouched. Asking for an index outside the label's domain is an error.
inline IndexedLabel reindex_label(const IndexedLabel& label, IndexId k, const SimpleExpr& f) {
  if (!label.indexing.contains(k))
    fail(ErrorKind::IndexOutOfScope,
         "label " + label.atom + " has no entry for i" + std::to_string(k));
  IndexedLabel out = label;
  SimpleExpr& entry = out.indexing.entries[k - out.indexing.start];
  entry = compose_simple(entry, f);
  return out;
}

// Evaluation of a label under a constant indexing: every non-constant entry
// needs a value for its index; entries that are already constant do not.
// Returns the fully constant label.
inline IndexedLabel eval_label(const IndexedLabel& label, const ConstantIndexing& c) {
  IndexedLabel out = label;
  for (SimpleExpr& e : out.indexing.entries) {
    if (e.is_constant()) continue;
    auto v = c.get(e.index);
    if (!v)
      fail(ErrorKind::UndefinedEvaluation,
           "label " + label.atom + " is not constant at i" + std::to_string(e.index));
    e = SimpleExpr::constant(e.index, eval_simple(e, *v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expressions.

enum class BinOp { Add, Sub, Mul, Mod, Lt, Le, Eq, Ne, And, Or };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  struct Lit {
    std::int64_t value;
  };
  struct Var {
    Ident name;
  };
  struct Bin {
    BinOp op;
    ExprPtr lhs, rhs;
  };
  // C-like conditional: test ? then : otherwise.
  struct Cond {
    ExprPtr test, then_e, else_e;
  };

  std::variant<Lit, Var, Bin, Cond> node;
};

inline ExprPtr lit(std::int64_t v) { return std::make_shared<Expr>(Expr{Expr::Lit{v}}); }
inline ExprPtr var(Ident name) { return std::make_shared<Expr>(Expr{Expr::Var{std::move(name)}}); }
inline ExprPtr bin(BinOp op, ExprPtr l, ExprPtr r) {
  return std::make_shared<Expr>(Expr{Expr::Bin{op, std::move(l), std::move(r)}});
}
inline ExprPtr cond(ExprPtr t, ExprPtr a, ExprPtr b) {
  return std::make_shared<Expr>(Expr{Expr::Cond{std::move(t), std::move(a), std::move(b)}});
}

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (auto* la = std::get_if<Expr::Lit>(&a->node))
    return la->value == std::get<Expr::Lit>(b->node).value;
  if (auto* va = std::get_if<Expr::Var>(&a->node))
    return va->name == std::get<Expr::Var>(b->node).name;
  if (auto* ba = std::get_if<Expr::Bin>(&a->node)) {
    const auto& bb = std::get<Expr::Bin>(b->node);
    return ba->op == bb.op && expr_equal(ba->lhs, bb.lhs) && expr_equal(ba->rhs, bb.rhs);
  }
  const auto& ca = std::get<Expr::Cond>(a->node);
  const auto& cb = std::get<Expr::Cond>(b->node);
  return expr_equal(ca.test, cb.test) && expr_equal(ca.then_e, cb.then_e) &&
         expr_equal(ca.else_e, cb.else_e);
}

// ---------------------------------------------------------------------------
// Statements. One AST serves all three levels: plain programs carry no
// labels and no loop indexes, plainly labelled ones carry labels with empty
// indexings, indexed-labelled ones use the full machinery.

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Stmt {
  struct Skip {};
  struct Assign {
    Ident target;
    ExprPtr value;
  };
  // Kept in right-associated normal form: `first` is never itself a Seq.
  struct Seq {
    StmtPtr first, second;
  };
  struct If {
    ExprPtr guard;
    StmtPtr then_branch, else_branch;
  };
  struct While {
    ExprPtr guard;
    StmtPtr body;
    std::optional<IndexId> index;
  };
  struct Labelled {
    IndexedLabel label;
    StmtPtr body;
  };

  std::variant<Skip, Assign, Seq, If, While, Labelled> node;
};

inline StmtPtr skip() { return std::make_shared<Stmt>(Stmt{Stmt::Skip{}}); }
inline StmtPtr assign(Ident target, ExprPtr value) {
  return std::make_shared<Stmt>(Stmt{Stmt::Assign{std::move(target), std::move(value)}});
}
inline bool is_skip(const StmtPtr& s) { return std::holds_alternative<Stmt::Skip>(s->node); }
inline bool is_seq(const StmtPtr& s) { return std::holds_alternative<Stmt::Seq>(s->node); }

// Sequencing, renormalized so the left child is never a Seq.
inline StmtPtr seq(StmtPtr a, StmtPtr b) {
  if (const auto* sa = std::get_if<Stmt::Seq>(&a->node))
    return seq(sa->first, seq(sa->second, std::move(b)));
  return std::make_shared<Stmt>(Stmt{Stmt::Seq{std::move(a), std::move(b)}});
}
inline StmtPtr seq_of(const std::vector<StmtPtr>& stmts) {
  if (stmts.empty()) return skip();
  StmtPtr out = stmts.back();
  for (std::size_t i = stmts.size() - 1; i-- > 0;) out = seq(stmts[i], out);
  return out;
}
inline StmtPtr if_(ExprPtr guard, StmtPtr then_branch, StmtPtr else_branch) {
  return std::make_shared<Stmt>(
      Stmt{Stmt::If{std::move(guard), std::move(then_branch), std::move(else_branch)}});
}
inline StmtPtr while_(ExprPtr guard, StmtPtr body, std::optional<IndexId> index = std::nullopt) {
  return std::make_shared<Stmt>(Stmt{Stmt::While{std::move(guard), std::move(body), index}});
}
inline StmtPtr labelled(IndexedLabel label, StmtPtr body) {
  return std::make_shared<Stmt>(Stmt{Stmt::Labelled{std::move(label), std::move(body)}});
}

// The elements of the right-associated spine, all non-Seq.
inline void seq_elements(const StmtPtr& s, std::vector<StmtPtr>& out) {
  if (const auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    seq_elements(sq->first, out);
    seq_elements(sq->second, out);
  } else {
    out.push_back(s);
  }
}
inline std::vector<StmtPtr> seq_elements(const StmtPtr& s) {
  std::vector<StmtPtr> out;
  seq_elements(s, out);
  return out;
}

inline bool stmt_equal(const StmtPtr& a, const StmtPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->node.index() != b->node.index()) return false;
  if (std::holds_alternative<Stmt::Skip>(a->node)) return true;
  if (auto* aa = std::get_if<Stmt::Assign>(&a->node)) {
    const auto& ab = std::get<Stmt::Assign>(b->node);
    return aa->target == ab.target && expr_equal(aa->value, ab.value);
  }
  if (auto* sa = std::get_if<Stmt::Seq>(&a->node)) {
    const auto& sb = std::get<Stmt::Seq>(b->node);
    return stmt_equal(sa->first, sb.first) && stmt_equal(sa->second, sb.second);
  }
  if (auto* ia = std::get_if<Stmt::If>(&a->node)) {
    const auto& ib = std::get<Stmt::If>(b->node);
    return expr_equal(ia->guard, ib.guard) && stmt_equal(ia->then_branch, ib.then_branch) &&
           stmt_equal(ia->else_branch, ib.else_branch);
  }
  if (auto* wa = std::get_if<Stmt::While>(&a->node)) {
    const auto& wb = std::get<Stmt::While>(b->node);
    return wa->index == wb.index && expr_equal(wa->guard, wb.guard) &&
           stmt_equal(wa->body, wb.body);
  }
  const auto& la = std::get<Stmt::Labelled>(a->node);
  const auto& lb = std::get<Stmt::Labelled>(b->node);
  return la.label == lb.label && stmt_equal(la.body, lb.body);
}

// Reindexing extended to statements: every contained label is reindexed at
// i_k. A label whose domain does not reach i_k raises index-out-of-scope;
// such labels cannot occur inside the body of a loop indexed by i_k.
inline StmtPtr reindex_stmt(const StmtPtr& s, IndexId k, const SimpleExpr& f) {
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node))
    return seq(reindex_stmt(sq->first, k, f), reindex_stmt(sq->second, k, f));
  if (auto* i = std::get_if<Stmt::If>(&s->node))
    return if_(i->guard, reindex_stmt(i->then_branch, k, f), reindex_stmt(i->else_branch, k, f));
  if (auto* w = std::get_if<Stmt::While>(&s->node))
    return while_(w->guard, reindex_stmt(w->body, k, f), w->index);
  const auto& l = std::get<Stmt::Labelled>(s->node);
  return labelled(reindex_label(l.label, k, f), reindex_stmt(l.body, k, f));
}

// Collects every label in preorder.
inline void collect_labels(const StmtPtr& s, std::vector<IndexedLabel>& out) {
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    collect_labels(sq->first, out);
    collect_labels(sq->second, out);
  } else if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    collect_labels(i->then_branch, out);
    collect_labels(i->else_branch, out);
  } else if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    collect_labels(w->body, out);
  } else if (auto* l = std::get_if<Stmt::Labelled>(&s->node)) {
    out.push_back(l->label);
    collect_labels(l->body, out);
  }
}
inline std::vector<IndexedLabel> collect_labels(const StmtPtr& s) {
  std::vector<IndexedLabel> out;
  collect_labels(s, out);
  return out;
}

}  // namespace idxcost

#endif  // IDXCOST_SYNTAX_HPP
