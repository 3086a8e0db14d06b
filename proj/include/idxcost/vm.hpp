#ifndef IDXCOST_VM_HPP
#define IDXCOST_VM_HPP

// Flat sequential instruction language. Lowering is structural: seq
// concatenates, assignments map to ASSIGN, a conditional becomes a BRANCH
// whose then-code is followed (when an else block exists) by a single JUMP
// over it, a labelled statement becomes EMIT followed by its body, and an
// indexed loop is IND_RESET / head BRANCH / body / IND_INC / JUMP head.
//
// One non-structural rule: when the false arm of an else-less conditional
// can only flow through machinery of loops and conditionals guarded by the
// very same expression (which must then also evaluate false, the store being
// untouched in between), the BRANCH targets the spot where that flow ends.
// Peeling and unrolling produce exactly such guards; the rule keeps every
// path between consecutive EMITs unique, so block costs stay well defined
// for the transformed code. Skipped IND_RESET/IND_INC only touch indexes of
// loops that are not entered again before their next reset.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/interp.hpp"
#include "idxcost/syntax.hpp"
#include "idxcost/text.hpp"

namespace idxcost {

struct VmInstr {
  struct Emit {
    IndexedLabel label;  // static; evaluated against the index registers
  };
  struct IndReset {
    IndexId index;
  };
  struct IndInc {
    IndexId index;
  };
  struct Assign {
    Ident target;
    ExprPtr value;
  };
  struct Branch {
    ExprPtr guard;
    std::int64_t on_true = -1;
    std::int64_t on_false = -1;
  };
  struct Jump {
    std::int64_t target = -1;
  };
  struct Halt {};

  std::variant<Emit, IndReset, IndInc, Assign, Branch, Jump, Halt> node;
};

struct VmProgram {
  std::vector<VmInstr> instrs;

  std::size_t size() const { return instrs.size(); }
};

enum class Opcode { Emit, IndReset, IndInc, Assign, Branch, Jump, Halt };

inline Opcode opcode_of(const VmInstr& i) {
  return static_cast<Opcode>(i.node.index());
}

inline const char* opcode_name(Opcode op) {
  switch (op) {
    case Opcode::Emit: return "emit";
    case Opcode::IndReset: return "ind_reset";
    case Opcode::IndInc: return "ind_inc";
    case Opcode::Assign: return "assign";
    case Opcode::Branch: return "branch";
    case Opcode::Jump: return "jump";
    case Opcode::Halt: return "halt";
  }
  return "?";
}

// Per-opcode execution costs. Index bookkeeping costs like any real
// instruction; EMIT and HALT are free unless overridden.
struct CostModel {
  std::map<Opcode, std::uint64_t> costs;

  static CostModel standard() {
    CostModel m;
    m.costs = {{Opcode::Emit, 0},   {Opcode::IndReset, 1}, {Opcode::IndInc, 1},
               {Opcode::Assign, 1}, {Opcode::Branch, 1},   {Opcode::Jump, 1},
               {Opcode::Halt, 0}};
    return m;
  }
  static CostModel all_ones() {
    CostModel m = standard();
    for (auto& [op, c] : m.costs) c = 1;
    return m;
  }

  std::uint64_t cost(Opcode op) const {
    auto it = costs.find(op);
    return it == costs.end() ? 0 : it->second;
  }
};

// ---------------------------------------------------------------------------
// Lowering.

namespace detail {

class Lowerer {
 public:
  VmProgram lower(const StmtPtr& program) {
    int halt = fresh();
    std::vector<ContEntry> cont{{ContEntry::Kind::End, nullptr, halt, nullptr, 0}};
    lower_stmt(program, fresh_bound(), cont);
    bind(halt);
    emit(VmInstr{VmInstr::Halt{}});
    patch();
    return std::move(out_);
  }

 private:
  // What executes after the statement currently being lowered, innermost
  // first. Next entries carry the statement and the symbolic label of its
  // first instruction; LoopEnd marks the end of an enclosing loop body.
  struct ContEntry {
    enum class Kind { Next, LoopEnd, End } kind;
    const StmtPtr* stmt = nullptr;  // Next
    int entry = -1;                 // Next: statement entry; End: halt
    const ExprPtr* loop_guard = nullptr;  // LoopEnd
    IndexId loop_index = 0;               // LoopEnd (unused for unindexed)
    int loop_exit = -1;                   // LoopEnd
    int body_end = -1;                    // LoopEnd: address of IND_INC/JUMP
  };

  int fresh() {
    bound_.push_back(-1);
    return static_cast<int>(bound_.size()) - 1;
  }
  int fresh_bound() {
    int l = fresh();
    bind(l);
    return l;
  }
  void bind(int label) { bound_[label] = static_cast<std::int64_t>(out_.instrs.size()); }
  void emit(VmInstr i) { out_.instrs.push_back(std::move(i)); }

  void lower_stmt(const StmtPtr& s, int entry, std::vector<ContEntry>& cont) {
    bind(entry);
    if (std::holds_alternative<Stmt::Skip>(s->node)) return;
    if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
      emit(VmInstr{VmInstr::Assign{a->target, a->value}});
      return;
    }
    if (std::holds_alternative<Stmt::Seq>(s->node)) {
      std::vector<StmtPtr> elems = seq_elements(s);
      std::vector<int> entries(elems.size());
      entries[0] = entry;
      for (std::size_t i = 1; i < elems.size(); ++i) entries[i] = fresh();
      for (std::size_t i = 0; i < elems.size(); ++i) {
        std::size_t mark = cont.size();
        for (std::size_t j = elems.size(); j-- > i + 1;)
          cont.push_back({ContEntry::Kind::Next, &elems[j], entries[j], nullptr, 0});
        lower_stmt(elems[i], entries[i], cont);
        cont.resize(mark);
      }
      return;
    }
    if (auto* i = std::get_if<Stmt::If>(&s->node)) {
      int then_entry = fresh();
      if (is_skip(i->else_branch)) {
        int on_false = false_target(i->guard, cont);
        emit_branch(i->guard, then_entry, on_false);
        lower_stmt(i->then_branch, then_entry, cont);
        return;  // then falls through to the join
      }
      int else_entry = fresh();
      int join = fresh();
      emit_branch(i->guard, then_entry, else_entry);
      lower_stmt(i->then_branch, then_entry, cont);
      emit_jump(join);
      lower_stmt(i->else_branch, else_entry, cont);
      bind(join);
      return;
    }
    if (auto* w = std::get_if<Stmt::While>(&s->node)) {
      if (w->index) emit(VmInstr{VmInstr::IndReset{*w->index}});
      int head = fresh_bound();
      int body_entry = fresh();
      int exit = fresh();
      int body_end = fresh();
      emit_branch(w->guard, body_entry, exit);
      {
        std::size_t mark = cont.size();
        cont.push_back({ContEntry::Kind::LoopEnd, nullptr, -1, &w->guard,
                        w->index.value_or(0), exit, body_end});
        lower_stmt(w->body, body_entry, cont);
        cont.resize(mark);
      }
      bind(body_end);
      if (w->index) emit(VmInstr{VmInstr::IndInc{*w->index}});
      emit_jump(head);
      bind(exit);
      return;
    }
    const auto& l = std::get<Stmt::Labelled>(s->node);
    emit(VmInstr{VmInstr::Emit{l.label}});
    lower_stmt(l.body, fresh_bound(), cont);
  }

  // Where an else-less conditional's false arm lands: walk forward past
  // statements that cannot execute (guarded by the same, still-false
  // expression) and produce no code, up to the first real instruction.
  int false_target(const ExprPtr& guard, const std::vector<ContEntry>& cont) {
    for (std::size_t i = cont.size(); i-- > 0;) {
      const ContEntry& e = cont[i];
      if (e.kind == ContEntry::Kind::End) return e.entry;
      if (e.kind == ContEntry::Kind::LoopEnd) {
        if (expr_equal(*e.loop_guard, guard)) continue;  // loop re-test fails too
        return e.body_end;
      }
      const StmtPtr& s = *e.stmt;
      if (is_skip(s)) continue;
      if (auto* w = std::get_if<Stmt::While>(&s->node))
        if (expr_equal(w->guard, guard)) continue;  // never entered
      if (auto* c = std::get_if<Stmt::If>(&s->node))
        if (is_skip(c->else_branch) && expr_equal(c->guard, guard)) continue;
      return e.entry;
    }
    fail(ErrorKind::StuckEvaluation, "unterminated lowering continuation");
  }

  void emit_branch(const ExprPtr& guard, int on_true, int on_false) {
    branch_patches_.push_back({static_cast<std::int64_t>(out_.instrs.size()), on_true, on_false});
    emit(VmInstr{VmInstr::Branch{guard, -1, -1}});
  }
  void emit_jump(int target) {
    jump_patches_.push_back({static_cast<std::int64_t>(out_.instrs.size()), target});
    emit(VmInstr{VmInstr::Jump{-1}});
  }

  void patch() {
    for (const auto& [addr, on_true, on_false] : branch_patches_) {
      auto& b = std::get<VmInstr::Branch>(out_.instrs[addr].node);
      b.on_true = bound_[on_true];
      b.on_false = bound_[on_false];
    }
    for (const auto& [addr, target] : jump_patches_) {
      std::get<VmInstr::Jump>(out_.instrs[addr].node).target = bound_[target];
    }
  }

  VmProgram out_;
  std::vector<std::int64_t> bound_;
  std::vector<std::tuple<std::int64_t, int, int>> branch_patches_;
  std::vector<std::pair<std::int64_t, int>> jump_patches_;
};

}  // namespace detail

inline VmProgram lower(const StmtPtr& program) { return detail::Lowerer().lower(program); }

// ---------------------------------------------------------------------------
// Execution.

class VmMachine {
 public:
  VmMachine(const VmProgram& program, Store store, CostModel model)
      : program_(program), store_(std::move(store)), model_(std::move(model)) {}

  bool halted() const { return halted_; }
  std::int64_t pc() const { return pc_; }
  const Store& store() const { return store_; }
  const Trace& trace() const { return trace_; }
  std::uint64_t cost() const { return cost_; }
  std::uint64_t steps() const { return steps_; }
  const ConstantIndexing& index_registers() const { return registers_; }

  // Executes one instruction; returns the emitted label, if any.
  std::optional<IndexedLabel> step() {
    if (halted_) fail(ErrorKind::StuckEvaluation, "step on a halted machine");
    if (pc_ < 0 || pc_ >= static_cast<std::int64_t>(program_.instrs.size()))
      fail(ErrorKind::StuckEvaluation, "program counter out of range");
    const VmInstr& instr = program_.instrs[pc_];
    cost_ = checked_add_nat(cost_, model_.cost(opcode_of(instr)));
    ++steps_;
    std::optional<IndexedLabel> emitted;
    if (auto* e = std::get_if<VmInstr::Emit>(&instr.node)) {
      emitted = eval_label(e->label, registers_);
      trace_.push_back(*emitted);
      ++pc_;
    } else if (auto* r = std::get_if<VmInstr::IndReset>(&instr.node)) {
      registers_.reset(r->index);
      ++pc_;
    } else if (auto* i = std::get_if<VmInstr::IndInc>(&instr.node)) {
      registers_.increment(i->index);
      ++pc_;
    } else if (auto* a = std::get_if<VmInstr::Assign>(&instr.node)) {
      store_.set(a->target, eval_expr(a->value, store_));
      ++pc_;
    } else if (auto* b = std::get_if<VmInstr::Branch>(&instr.node)) {
      pc_ = truthy(b->guard, store_) ? b->on_true : b->on_false;
    } else if (auto* j = std::get_if<VmInstr::Jump>(&instr.node)) {
      pc_ = j->target;
    } else {
      halted_ = true;
    }
    return emitted;
  }

 private:
  const VmProgram& program_;
  Store store_;
  CostModel model_;
  ConstantIndexing registers_;
  Trace trace_;
  std::int64_t pc_ = 0;
  std::uint64_t cost_ = 0;
  std::uint64_t steps_ = 0;
  bool halted_ = false;
};

struct VmResult {
  Store store;
  Trace trace;
  std::uint64_t actual_cost = 0;
  std::uint64_t steps = 0;
};

inline VmResult vm_run(const VmProgram& program, Store store,
                       const CostModel& model = CostModel::standard(),
                       std::uint64_t fuel = kDefaultFuel) {
  VmMachine m(program, std::move(store), model);
  while (!m.halted()) {
    if (m.steps() >= fuel)
      fail(ErrorKind::FuelExhausted,
           "execution did not finish within " + std::to_string(fuel) + " instructions");
    m.step();
  }
  return {m.store(), m.trace(), m.cost(), m.steps()};
}

// ---------------------------------------------------------------------------
// Listing format: one instruction per line, `addr: OPCODE args`.

inline std::string vm_listing(const VmProgram& program) {
  std::ostringstream os;
  for (std::size_t addr = 0; addr < program.instrs.size(); ++addr) {
    os << addr << ": ";
    const VmInstr& instr = program.instrs[addr];
    if (auto* e = std::get_if<VmInstr::Emit>(&instr.node))
      os << "EMIT " << label_text(e->label);
    else if (auto* r = std::get_if<VmInstr::IndReset>(&instr.node))
      os << "IND_RESET " << r->index;
    else if (auto* i = std::get_if<VmInstr::IndInc>(&instr.node))
      os << "IND_INC " << i->index;
    else if (auto* a = std::get_if<VmInstr::Assign>(&instr.node))
      os << "ASSIGN " << a->target << " := " << expr_text(a->value);
    else if (auto* b = std::get_if<VmInstr::Branch>(&instr.node))
      os << "BRANCH " << expr_text(b->guard) << " ? " << b->on_true << " : " << b->on_false;
    else if (auto* j = std::get_if<VmInstr::Jump>(&instr.node))
      os << "JUMP " << j->target;
    else
      os << "HALT";
    os << "\n";
  }
  return os.str();
}

inline VmProgram parse_vm_listing(const std::string& text) {
  VmProgram program;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string addr_tok, op;
    if (!(ls >> addr_tok)) continue;
    auto err = [&](const std::string& msg) {
      fail(ErrorKind::Parse, "listing line " + std::to_string(lineno) + ": " + msg);
    };
    auto parse_number = [&](const std::string& text) -> std::int64_t {
      try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(text, &used);
        while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used])))
          ++used;
        if (used != text.size()) err("trailing input after number");
        return v;
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        err("bad numeric operand");
        return -1;
      }
    };
    if (addr_tok.back() != ':') err("expected 'addr:'");
    if (parse_number(addr_tok.substr(0, addr_tok.size() - 1)) !=
        static_cast<std::int64_t>(program.instrs.size()))
      err("addresses must be consecutive from 0");
    if (!(ls >> op)) err("missing opcode");
    std::string rest;
    std::getline(ls, rest);
    if (op == "EMIT") {
      // Reuse the statement parser on `label: skip`.
      StmtPtr s = parse_program(rest + ": skip", true);
      program.instrs.push_back(
          VmInstr{VmInstr::Emit{std::get<Stmt::Labelled>(s->node).label}});
    } else if (op == "IND_RESET" || op == "IND_INC") {
      std::int64_t k = parse_number(rest);
      if (k < 0) err("negative loop index");
      if (op == "IND_RESET")
        program.instrs.push_back(VmInstr{VmInstr::IndReset{static_cast<IndexId>(k)}});
      else
        program.instrs.push_back(VmInstr{VmInstr::IndInc{static_cast<IndexId>(k)}});
    } else if (op == "ASSIGN") {
      auto sep = rest.find(":=");
      if (sep == std::string::npos) err("ASSIGN needs 'target := expr'");
      std::string target = rest.substr(0, sep);
      target.erase(0, target.find_first_not_of(' '));
      target.erase(target.find_last_not_of(' ') + 1);
      program.instrs.push_back(
          VmInstr{VmInstr::Assign{target, parse_expr_text(rest.substr(sep + 2))}});
    } else if (op == "BRANCH") {
      auto q = rest.rfind('?');
      auto c = rest.rfind(':');
      if (q == std::string::npos || c == std::string::npos || c < q)
        err("BRANCH needs 'guard ? t : f'");
      ExprPtr guard = parse_expr_text(rest.substr(0, q));
      std::int64_t on_true = parse_number(rest.substr(q + 1, c - q - 1));
      std::int64_t on_false = parse_number(rest.substr(c + 1));
      program.instrs.push_back(VmInstr{VmInstr::Branch{guard, on_true, on_false}});
    } else if (op == "JUMP") {
      program.instrs.push_back(VmInstr{VmInstr::Jump{parse_number(rest)}});
    } else if (op == "HALT") {
      program.instrs.push_back(VmInstr{VmInstr::Halt{}});
    } else {
      err("unknown opcode '" + op + "'");
    }
  }
  for (std::size_t addr = 0; addr < program.instrs.size(); ++addr) {
    auto in_range = [&](std::int64_t t) {
      return t >= 0 && t < static_cast<std::int64_t>(program.instrs.size());
    };
    if (auto* b = std::get_if<VmInstr::Branch>(&program.instrs[addr].node)) {
      if (!in_range(b->on_true) || !in_range(b->on_false))
        fail(ErrorKind::Parse, "branch target out of range at " + std::to_string(addr));
    } else if (auto* j = std::get_if<VmInstr::Jump>(&program.instrs[addr].node)) {
      if (!in_range(j->target))
        fail(ErrorKind::Parse, "jump target out of range at " + std::to_string(addr));
    }
  }
  return program;
}

}  // namespace idxcost

#endif  // IDXCOST_VM_HPP
