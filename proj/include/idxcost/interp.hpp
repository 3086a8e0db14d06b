#ifndef IDXCOST_INTERP_HPP
#define IDXCOST_INTERP_HPP

// Small-step interpreter covering all three language levels with one
// machine. The state is (current, continuation, store, indexes): labelled
// statements emit their label evaluated under the current constant indexing;
// an indexed loop resets its index on entry and increments it each time the
// active-loop frame re-enters the body. Plain statements never touch the
// index state.

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/syntax.hpp"
#include "idxcost/text.hpp"

namespace idxcost {

struct Store {
  std::map<Ident, std::int64_t> vars;

  // Reads of unset variables yield 0.
  std::int64_t get(const Ident& name) const {
    auto it = vars.find(name);
    return it == vars.end() ? 0 : it->second;
  }
  void set(const Ident& name, std::int64_t v) { vars[name] = v; }

  friend bool operator==(const Store& a, const Store& b) { return a.vars == b.vars; }
};

inline std::int64_t eval_expr(const ExprPtr& e, const Store& store) {
  if (auto* l = std::get_if<Expr::Lit>(&e->node)) return l->value;
  if (auto* v = std::get_if<Expr::Var>(&e->node)) return store.get(v->name);
  if (auto* b = std::get_if<Expr::Bin>(&e->node)) {
    // && and || short-circuit; all comparisons yield 0 or 1.
    if (b->op == BinOp::And)
      return eval_expr(b->lhs, store) != 0 && eval_expr(b->rhs, store) != 0 ? 1 : 0;
    if (b->op == BinOp::Or)
      return eval_expr(b->lhs, store) != 0 || eval_expr(b->rhs, store) != 0 ? 1 : 0;
    std::int64_t x = eval_expr(b->lhs, store);
    std::int64_t y = eval_expr(b->rhs, store);
    switch (b->op) {
      case BinOp::Add: return checked_add(x, y);
      case BinOp::Sub: return checked_sub(x, y);
      case BinOp::Mul: return checked_mul(x, y);
      case BinOp::Mod:
        if (y == 0) fail(ErrorKind::DivisionByZero, "modulus by zero");
        if (x == INT64_MIN && y == -1) fail(ErrorKind::Overflow, "integer overflow in %");
        return x % y;
      case BinOp::Lt: return x < y ? 1 : 0;
      case BinOp::Le: return x <= y ? 1 : 0;
      case BinOp::Eq: return x == y ? 1 : 0;
      case BinOp::Ne: return x != y ? 1 : 0;
      default: break;
    }
    fail(ErrorKind::StuckEvaluation, "unhandled operator");
  }
  const auto& c = std::get<Expr::Cond>(e->node);
  return eval_expr(c.test, store) != 0 ? eval_expr(c.then_e, store)
                                       : eval_expr(c.else_e, store);
}

inline bool truthy(const ExprPtr& e, const Store& store) { return eval_expr(e, store) != 0; }

// Emitted labels carry fully constant indexings.
using Trace = std::vector<IndexedLabel>;

inline std::string trace_line(const IndexedLabel& label) {
  std::string out = label.atom + "<";
  for (std::size_t i = 0; i < label.indexing.entries.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(label.indexing.entries[i].offset);
  }
  return out + ">";
}

inline std::string trace_text(const Trace& trace) {
  std::string out;
  for (const IndexedLabel& l : trace) out += trace_line(l) + "\n";
  return out;
}

inline bool trace_equal(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) return false;
  return true;
}

// A continuation frame is either a statement to run next or the marker of a
// loop we are currently inside of.
struct Frame {
  struct Next {
    StmtPtr stmt;
  };
  struct ActiveLoop {
    ExprPtr guard;
    StmtPtr body;
    IndexId index;
  };
  std::variant<Next, ActiveLoop> node;
};

struct MachineState {
  StmtPtr current;
  std::vector<Frame> kont;
  Store store;
  ConstantIndexing indexes;  // extended on demand at loop entry

  bool halted() const { return is_skip(current) && kont.empty(); }
};

inline MachineState initial_state(StmtPtr program, Store store) {
  return MachineState{std::move(program), {}, std::move(store), {}};
}

// One transition; returns the emitted label, if any.
inline std::optional<IndexedLabel> step(MachineState& st) {
  if (st.halted()) fail(ErrorKind::StuckEvaluation, "step on a halted machine");
  const StmtPtr s = st.current;
  if (is_skip(s)) {
    Frame frame = std::move(st.kont.back());
    st.kont.pop_back();
    if (auto* n = std::get_if<Frame::Next>(&frame.node)) {
      st.current = n->stmt;
      return std::nullopt;
    }
    auto& loop = std::get<Frame::ActiveLoop>(frame.node);
    if (truthy(loop.guard, st.store)) {
      st.indexes.increment(loop.index);
      st.current = loop.body;
      st.kont.push_back(std::move(frame));
    }
    // Otherwise the loop is left; current stays skip with the frame popped.
    return std::nullopt;
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    st.store.set(a->target, eval_expr(a->value, st.store));
    st.current = skip();
    return std::nullopt;
  }
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    st.kont.push_back(Frame{Frame::Next{sq->second}});
    st.current = sq->first;
    return std::nullopt;
  }
  if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    st.current = truthy(i->guard, st.store) ? i->then_branch : i->else_branch;
    return std::nullopt;
  }
  if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    if (!truthy(w->guard, st.store)) {
      st.current = skip();
      return std::nullopt;
    }
    if (w->index) {
      st.indexes.reset(*w->index);
      st.kont.push_back(Frame{Frame::ActiveLoop{w->guard, w->body, *w->index}});
    } else {
      st.kont.push_back(Frame{Frame::Next{s}});
    }
    st.current = w->body;
    return std::nullopt;
  }
  const auto& l = std::get<Stmt::Labelled>(s->node);
  IndexedLabel emitted = eval_label(l.label, st.indexes);
  st.current = l.body;
  return emitted;
}

struct RunResult {
  Store store;
  Trace trace;
  std::uint64_t steps = 0;
};

inline constexpr std::uint64_t kDefaultFuel = 1'000'000;

inline RunResult run(StmtPtr program, Store store, std::uint64_t fuel = kDefaultFuel) {
  MachineState st = initial_state(std::move(program), std::move(store));
  RunResult result;
  while (!st.halted()) {
    if (result.steps >= fuel)
      fail(ErrorKind::FuelExhausted,
           "execution did not finish within " + std::to_string(fuel) + " steps");
    if (auto emitted = step(st)) result.trace.push_back(std::move(*emitted));
    ++result.steps;
  }
  result.store = std::move(st.store);
  return result;
}

// Store comparison that ignores the instrumentation accumulator and index
// variables.
inline bool user_stores_equal(const Store& a, const Store& b) {
  auto user_vars = [](const Store& s) {
    std::map<Ident, std::int64_t> out;
    for (const auto& [name, value] : s.vars)
      if (!is_reserved_ident(name) && value != 0) out.emplace(name, value);
    return out;
  };
  return user_vars(a) == user_vars(b);
}

inline std::string store_text(const Store& store) {
  std::ostringstream os;
  for (const auto& [name, value] : store.vars) os << name << " = " << value << "\n";
  return os.str();
}

inline Store parse_store(const std::string& text) {
  Store store;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Usage, "store entry '" + part + "' is not of the form name=value");
    std::string name = part.substr(0, eq);
    try {
      std::int64_t value = std::stoll(part.substr(eq + 1));
      store.set(name, value);
    } catch (const std::exception&) {
      fail(ErrorKind::Usage, "store entry '" + part + "' has a bad value");
    }
  }
  return store;
}

}  // namespace idxcost

#endif  // IDXCOST_INTERP_HPP
