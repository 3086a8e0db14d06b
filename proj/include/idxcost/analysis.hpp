#ifndef IDXCOST_ANALYSIS_HPP
#define IDXCOST_ANALYSIS_HPP

// Static block costs over the instruction-level control flow graph. A
// label's block is everything reachable from its EMIT up to (and excluding)
// the next EMIT; soundness demands that every cycle crosses an EMIT, which
// also bounds the path enumeration. When the paths through a block disagree
// the strict mode refuses and the sound mode takes the maximum, flagging the
// label as imprecise.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/syntax.hpp"
#include "idxcost/text.hpp"
#include "idxcost/vm.hpp"

namespace idxcost {

struct Cfg {
  std::vector<std::vector<std::int64_t>> successors;

  static Cfg of(const VmProgram& program) {
    Cfg cfg;
    cfg.successors.resize(program.instrs.size());
    for (std::size_t addr = 0; addr < program.instrs.size(); ++addr) {
      const VmInstr& instr = program.instrs[addr];
      if (auto* b = std::get_if<VmInstr::Branch>(&instr.node)) {
        cfg.successors[addr] = {b->on_true, b->on_false};
      } else if (auto* j = std::get_if<VmInstr::Jump>(&instr.node)) {
        cfg.successors[addr] = {j->target};
      } else if (std::holds_alternative<VmInstr::Halt>(instr.node)) {
        // no successors
      } else {
        cfg.successors[addr] = {static_cast<std::int64_t>(addr) + 1};
      }
    }
    return cfg;
  }
};

struct SoundnessReport {
  // One representative cycle that avoids every EMIT, if any exists.
  std::vector<std::int64_t> unlabelled_cycle;
  bool ok() const { return unlabelled_cycle.empty(); }
};

inline SoundnessReport check_soundness(const VmProgram& program) {
  Cfg cfg = Cfg::of(program);
  SoundnessReport report;
  std::size_t n = program.instrs.size();
  // DFS for a back edge in the graph restricted to non-EMIT instructions.
  std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::int64_t> stack;
  auto is_emit = [&](std::int64_t a) {
    return std::holds_alternative<VmInstr::Emit>(program.instrs[a].node);
  };
  std::function<bool(std::int64_t)> dfs = [&](std::int64_t a) -> bool {
    state[a] = 1;
    stack.push_back(a);
    for (std::int64_t succ : cfg.successors[a]) {
      if (is_emit(succ)) continue;
      if (state[succ] == 1) {
        auto it = std::find(stack.begin(), stack.end(), succ);
        report.unlabelled_cycle.assign(it, stack.end());
        return true;
      }
      if (state[succ] == 0 && dfs(succ)) return true;
    }
    stack.pop_back();
    state[a] = 2;
    return false;
  };
  for (std::size_t a = 0; a < n; ++a) {
    if (state[a] == 0 && !is_emit(a) && dfs(static_cast<std::int64_t>(a))) break;
  }
  return report;
}

enum class KappaMode { Strict, Sound };

struct LabelCost {
  IndexedLabel label;
  std::uint64_t cost = 0;
  bool precise = true;
  std::uint64_t min_cost = 0, max_cost = 0;
  std::vector<std::int64_t> cheap_path, dear_path;  // witnesses when imprecise
};

struct CostMap {
  // Keyed by the static label as written in the code.
  std::vector<LabelCost> entries;

  const LabelCost* find(const IndexedLabel& label) const {
    for (const LabelCost& e : entries)
      if (e.label == label) return &e;
    return nullptr;
  }
  std::uint64_t at(const IndexedLabel& label) const {
    const LabelCost* e = find(label);
    if (!e) fail(ErrorKind::IncompleteCostMap, "no cost for label " + label_text(label));
    return e->cost;
  }
  bool all_precise() const {
    for (const LabelCost& e : entries)
      if (!e.precise) return false;
    return true;
  }
};

namespace detail {

// Path costs from `addr` to the end of the enclosing block, with one witness
// path per distinct cost. Blocks end at the next EMIT (excluded) or at HALT
// (included, so halting cost lands in the final block).
struct BlockPaths {
  const VmProgram& program;
  const Cfg& cfg;
  const CostModel& model;
  std::map<std::int64_t, std::map<std::uint64_t, std::vector<std::int64_t>>> memo;

  const std::map<std::uint64_t, std::vector<std::int64_t>>& from(std::int64_t addr) {
    auto it = memo.find(addr);
    if (it != memo.end()) return it->second;
    std::map<std::uint64_t, std::vector<std::int64_t>> result;
    const VmInstr& instr = program.instrs[addr];
    if (std::holds_alternative<VmInstr::Emit>(instr.node)) {
      result[0] = {};
    } else if (std::holds_alternative<VmInstr::Halt>(instr.node)) {
      result[model.cost(Opcode::Halt)] = {addr};
    } else {
      std::uint64_t here = model.cost(opcode_of(instr));
      for (std::int64_t succ : cfg.successors[addr]) {
        for (const auto& [cost, path] : from(succ)) {
          std::uint64_t total = checked_add_nat(here, cost);
          if (result.count(total)) continue;
          std::vector<std::int64_t> witness{addr};
          witness.insert(witness.end(), path.begin(), path.end());
          result[total] = std::move(witness);
        }
      }
    }
    return memo.emplace(addr, std::move(result)).first->second;
  }
};

}  // namespace detail

// Computes the per-label cost map. Requires soundness; in strict mode every
// block must have a single path cost.
inline CostMap compute_kappa(const VmProgram& program, const CostModel& model,
                             KappaMode mode) {
  SoundnessReport sound = check_soundness(program);
  if (!sound.ok()) {
    std::string cycle;
    for (std::int64_t a : sound.unlabelled_cycle) cycle += " " + std::to_string(a);
    fail(ErrorKind::SoundnessViolation, "cycle without a label at addresses" + cycle);
  }
  Cfg cfg = Cfg::of(program);
  detail::BlockPaths paths{program, cfg, model, {}};
  CostMap out;
  for (std::size_t addr = 0; addr < program.instrs.size(); ++addr) {
    auto* e = std::get_if<VmInstr::Emit>(&program.instrs[addr].node);
    if (!e) continue;
    // An EMIT is never the last instruction: HALT terminates the program.
    const auto& costs = paths.from(static_cast<std::int64_t>(addr) + 1);
    std::uint64_t emit_cost = model.cost(Opcode::Emit);
    LabelCost entry;
    entry.label = e->label;
    entry.min_cost = checked_add_nat(emit_cost, costs.begin()->first);
    entry.max_cost = checked_add_nat(emit_cost, costs.rbegin()->first);
    entry.precise = costs.size() == 1;
    entry.cost = entry.max_cost;
    if (!entry.precise) {
      if (mode == KappaMode::Strict) {
        std::ostringstream os;
        os << "block of " << label_text(e->label) << " at " << addr
           << " has path costs " << entry.min_cost << ".." << entry.max_cost;
        fail(ErrorKind::PrecisenessViolation, os.str());
      }
      entry.cheap_path = costs.begin()->second;
      entry.dear_path = costs.rbegin()->second;
    }
    // Distinct EMITs of one label would have to agree; merge by maximum.
    if (const LabelCost* prior = out.find(entry.label)) {
      if (prior->cost != entry.cost && mode == KappaMode::Strict)
        fail(ErrorKind::PrecisenessViolation,
             "label " + label_text(e->label) + " occurs twice with different costs");
      LabelCost merged = *prior;
      merged.precise = merged.precise && entry.precise && prior->cost == entry.cost;
      merged.cost = std::max(prior->cost, entry.cost);
      merged.min_cost = std::min(prior->min_cost, entry.min_cost);
      merged.max_cost = std::max(prior->max_cost, entry.max_cost);
      for (LabelCost& existing : out.entries)
        if (existing.label == entry.label) existing = merged;
      continue;
    }
    out.entries.push_back(std::move(entry));
  }
  return out;
}

// Plain-labelling view: per-atom maximum over all indexed occurrences.
struct AtomCosts {
  std::map<CostAtom, std::uint64_t> costs;
  // Atoms whose occurrences disagree, so the maximum over-approximates.
  std::set<CostAtom> flattened;
};

inline AtomCosts collapse_to_atoms(const CostMap& kappa) {
  AtomCosts out;
  std::map<CostAtom, std::uint64_t> mins;
  for (const LabelCost& e : kappa.entries) {
    auto [it, inserted] = out.costs.emplace(e.label.atom, e.cost);
    auto [mit, minserted] = mins.emplace(e.label.atom, e.cost);
    if (!inserted) {
      it->second = std::max(it->second, e.cost);
      mit->second = std::min(mit->second, e.cost);
    }
    if (!e.precise) mit->second = std::min(mit->second, e.min_cost);
  }
  for (const auto& [atom, max_cost] : out.costs)
    if (mins[atom] != max_cost) out.flattened.insert(atom);
  return out;
}

inline std::string cost_map_text(const CostMap& kappa) {
  std::ostringstream os;
  for (const LabelCost& e : kappa.entries) {
    os << label_text(e.label) << " = " << e.cost;
    if (!e.precise) os << "  [imprecise min=" << e.min_cost << " max=" << e.max_cost << "]";
    os << "\n";
  }
  return os.str();
}

}  // namespace idxcost

#endif  // IDXCOST_ANALYSIS_HPP
