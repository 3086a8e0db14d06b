#ifndef IDXCOST_HARNESS_HPP
#define IDXCOST_HARNESS_HPP

// End-to-end verification trials. One trial generates a program, labels it,
// applies a random peel/unroll script, and then checks the whole chain:
// label occurrences stay non-overlapping, the source, transformed and
// compiled programs leave identical traces and stores, every block cost is
// well defined, dependent costs agree with the per-occurrence map on a full
// sweep of index values, the indexed instrumentation accounts for exactly
// the compiled cost, and the per-atom instrumentation never undercounts.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/analysis.hpp"
#include "idxcost/depcost.hpp"
#include "idxcost/gen.hpp"
#include "idxcost/instrument.hpp"
#include "idxcost/interp.hpp"
#include "idxcost/label.hpp"
#include "idxcost/text.hpp"
#include "idxcost/transform.hpp"
#include "idxcost/vm.hpp"

namespace idxcost {

struct TrialFailure {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::string stage;
  std::string detail;
  std::string program;
  std::string script;
};

struct VerifyReport {
  std::uint64_t trials = 0;
  std::uint64_t passed = 0;
  std::vector<TrialFailure> failures;
  bool ok() const { return failures.empty(); }
};

namespace detail {

struct TrialCheck {
  TrialFailure pending;
  bool failed = false;

  void fall(const std::string& stage, const std::string& detail) {
    if (failed) return;
    failed = true;
    pending.stage = stage;
    pending.detail = detail;
  }
};

// Sweeps assignments of 0..limit to the given indexes, calling fn with each
// constant indexing.
template <typename Fn>
void sweep_indexes(const std::vector<IndexId>& indexes, std::uint64_t limit, Fn&& fn) {
  std::vector<std::uint64_t> values(indexes.size(), 0);
  while (true) {
    ConstantIndexing c;
    for (std::size_t i = 0; i < indexes.size(); ++i) c.values[indexes[i]] = values[i];
    fn(c);
    std::size_t pos = 0;
    while (pos < values.size() && ++values[pos] > limit) values[pos++] = 0;
    if (pos == values.size()) break;
  }
}

}  // namespace detail

// Checks that the dependent cost built for each atom reproduces the
// per-occurrence costs: whenever an occurrence evaluates to a constant
// label under some index values, the dependent cost at that constant equals
// the occurrence's cost. Returns an empty string or a description of the
// first mismatch.
inline std::string check_dependent_costs(const CostMap& kappa, std::uint64_t sweep_limit = 6) {
  std::set<CostAtom> atoms;
  for (const LabelCost& e : kappa.entries) atoms.insert(e.label.atom);
  for (const CostAtom& atom : atoms) {
    DepCostPtr dependent = build_dependent(atom, kappa);
    DepCostPtr simplified = simplify(dependent);
    for (const LabelCost& e : kappa.entries) {
      if (e.label.atom != atom) continue;
      std::vector<IndexId> needed;
      for (const SimpleExpr& entry : e.label.indexing.entries)
        if (!entry.is_constant()) needed.push_back(entry.index);
      std::string mismatch;
      detail::sweep_indexes(needed, sweep_limit, [&](const ConstantIndexing& c) {
        if (!mismatch.empty()) return;
        IndexedLabel constant = eval_label(e.label, c);
        ConstantIndexing at;
        for (const SimpleExpr& entry : constant.indexing.entries)
          at.values[entry.index] = entry.offset;
        std::uint64_t expect = e.cost;
        std::uint64_t got = eval_dependent(dependent, at);
        std::uint64_t got_simplified = eval_dependent(simplified, at);
        if (got != expect || got_simplified != expect) {
          std::ostringstream os;
          os << "dependent cost of " << label_text(constant) << " gives " << got << " ("
             << got_simplified << " simplified), occurrence " << label_text(e.label)
             << " costs " << expect;
          mismatch = os.str();
        }
      });
      if (!mismatch.empty()) return mismatch;
    }
  }
  return "";
}

// Runs one full-pipeline trial; fills `failure` and returns false on the
// first failed check.
inline bool run_trial(const GenParams& params, std::uint64_t trial, TrialFailure& failure,
                      std::uint64_t fuel = kDefaultFuel) {
  GenParams p = params;
  p.seed = params.seed + trial * 0x100000001b3ull;
  detail::TrialCheck check;
  check.pending.trial = trial;
  check.pending.seed = p.seed;

  StmtPtr program = generate_program(p);
  check.pending.program = pretty_print(program);
  try {
    StmtPtr indexed = label_indexed(program);
    StmtPtr plain = label_plain(program);
    if (!stmt_equal(strip_labels(indexed), program))
      check.fall("labelling", "strip after indexed labelling is not the original program");
    if (!stmt_equal(strip_labels(plain), program))
      check.fall("labelling", "strip after plain labelling is not the original program");
    if (!stmt_equal(erase_indexing(indexed), plain))
      check.fall("labelling", "plain labelling differs from indexed labelling erased");

    TransformScript script = generate_script(indexed, p, trial);
    check.pending.script = script_text(script);
    StmtPtr transformed = apply_script(indexed, script);

    NonOverlapReport overlap = check_non_overlap(transformed);
    if (!overlap.ok()) check.fall("non-overlap", non_overlap_text(overlap));

    Store store = generate_store(p, trial);
    RunResult source_run = run(indexed, store, fuel);
    RunResult transformed_run = run(transformed, store, fuel);
    if (!trace_equal(source_run.trace, transformed_run.trace))
      check.fall("trace preservation", "transformed program changed the trace");
    if (!user_stores_equal(source_run.store, transformed_run.store))
      check.fall("trace preservation", "transformed program changed the final store");

    RunResult plain_run = run(plain, store, fuel);
    if (plain_run.trace.size() != source_run.trace.size())
      check.fall("trace preservation", "plain and indexed labelling disagree on trace length");
    for (std::size_t i = 0; !check.failed && i < plain_run.trace.size(); ++i)
      if (plain_run.trace[i].atom != source_run.trace[i].atom)
        check.fall("trace preservation", "plain and indexed labelling disagree on atoms");

    RunResult stripped_run = run(program, store, fuel);
    if (!user_stores_equal(stripped_run.store, source_run.store))
      check.fall("erasure", "labelling changed the final store");

    CostModel model = CostModel::standard();
    VmProgram compiled = lower(transformed);
    VmResult vm = vm_run(compiled, store, model, fuel);
    if (!trace_equal(vm.trace, source_run.trace))
      check.fall("compilation", "compiled program changed the trace");
    if (!user_stores_equal(vm.store, source_run.store))
      check.fall("compilation", "compiled program changed the final store");

    VmProgram compiled_source = lower(indexed);
    VmResult vm_source = vm_run(compiled_source, store, model, fuel);
    if (!trace_equal(vm_source.trace, source_run.trace))
      check.fall("compilation", "compiled source program changed the trace");

    CostMap kappa = compute_kappa(compiled, model, KappaMode::Strict);

    // Static block costs must reproduce the dynamic cost along the trace.
    std::uint64_t trace_sum = 0;
    for (const IndexedLabel& emitted : vm.trace) {
      bool found = false;
      for (const LabelCost& e : kappa.entries) {
        if (!occurrence_covers(e.label, emitted)) continue;
        if (found) check.fall("non-overlap", "two occurrences cover one emission");
        found = true;
        trace_sum = checked_add_nat(trace_sum, e.cost);
      }
      if (!found) check.fall("cost analysis", "no occurrence covers an emitted label");
    }
    if (!check.failed && trace_sum != vm.actual_cost) {
      std::ostringstream os;
      os << "block costs sum to " << trace_sum << " but execution cost " << vm.actual_cost;
      check.fall("cost analysis", os.str());
    }

    std::string dependent_mismatch = check_dependent_costs(kappa);
    if (!dependent_mismatch.empty()) check.fall("dependent costs", dependent_mismatch);

    // Indexed instrumentation: exact accounting.
    std::map<CostAtom, DepCostPtr> dependent;
    for (const LabelCost& e : kappa.entries)
      if (!dependent.count(e.label.atom))
        dependent[e.label.atom] = simplify(build_dependent(e.label.atom, kappa));
    InstrumentedProgram exact = instrument_indexed(indexed, dependent);
    RunResult exact_run = run(exact.program, store, fuel);
    if (!user_stores_equal(exact_run.store, source_run.store))
      check.fall("instrumentation", "instrumentation changed the final store");
    std::int64_t accounted = exact_run.store.get(exact.cost_var);
    if (accounted < 0 || static_cast<std::uint64_t>(accounted) != vm.actual_cost) {
      std::ostringstream os;
      os << "instrumented cost " << accounted << " != executed cost " << vm.actual_cost;
      check.fall("instrumentation", os.str());
    }

    // Per-atom instrumentation: sound accounting, strict over-approximation
    // exactly when a flattened atom is emitted from a cheaper occurrence.
    AtomCosts atom_costs = collapse_to_atoms(kappa);
    InstrumentedProgram plain_instr = instrument_plain(plain, atom_costs.costs);
    RunResult plain_instr_run = run(plain_instr.program, store, fuel);
    std::int64_t plain_accounted = plain_instr_run.store.get(plain_instr.cost_var);
    if (plain_accounted < 0 ||
        static_cast<std::uint64_t>(plain_accounted) < vm.actual_cost)
      check.fall("instrumentation", "per-atom accounting undercounts");
    std::uint64_t atom_sum = 0;
    for (const IndexedLabel& emitted : vm.trace)
      atom_sum = checked_add_nat(atom_sum, atom_costs.costs.at(emitted.atom));
    if (!check.failed && atom_sum != static_cast<std::uint64_t>(plain_accounted))
      check.fall("instrumentation", "per-atom accounting does not match its own sum");
  } catch (const Error& e) {
    check.fall("exception", e.what());
  }

  if (check.failed) failure = check.pending;
  return !check.failed;
}

inline VerifyReport verify(const GenParams& params, std::uint64_t trials,
                           std::uint64_t fuel = kDefaultFuel) {
  VerifyReport report;
  report.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    TrialFailure failure;
    if (run_trial(params, t, failure, fuel))
      ++report.passed;
    else
      report.failures.push_back(std::move(failure));
  }
  return report;
}

inline std::string verify_text(const VerifyReport& report) {
  std::ostringstream os;
  os << "trials: " << report.trials << "\n";
  os << "passed: " << report.passed << "\n";
  if (!report.ok()) {
    const TrialFailure& f = report.failures.front();
    os << "first failure: trial " << f.trial << " (seed " << f.seed << ") at " << f.stage
       << "\n";
    os << "  " << f.detail << "\n";
    os << "program:\n" << f.program;
    if (!f.script.empty()) os << "script:\n" << f.script;
  }
  return os.str();
}

}  // namespace idxcost

#endif  // IDXCOST_HARNESS_HPP
