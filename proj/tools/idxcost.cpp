// Command-line driver for the indexed-cost toolkit:
//
//   idxcost label      source.imp [--plain]
//   idxcost transform  labelled.imp --script file
//   idxcost compile    labelled.imp
//   idxcost analyze    listing.vm [--costs file] [--mode strict|sound]
//   idxcost annotate   source.imp [--script file] [--costs file] [--plain|--symbolic]
//   idxcost run        input [--vm] [--store k=v,...] [--fuel n] [--costs file]
//   idxcost verify     [--seed n] [--trials n] [...generator knobs]
//
// Exit codes: 0 on success, 1 when a verification or analysis fails, 2 on
// usage or parse errors.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "idxcost/analysis.hpp"
#include "idxcost/cost_model_io.hpp"
#include "idxcost/depcost.hpp"
#include "idxcost/gen.hpp"
#include "idxcost/harness.hpp"
#include "idxcost/instrument.hpp"
#include "idxcost/interp.hpp"
#include "idxcost/label.hpp"
#include "idxcost/text.hpp"
#include "idxcost/transform.hpp"
#include "idxcost/vm.hpp"

namespace {

using namespace idxcost;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Usage, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int exit_code_of(const Error& e) {
  switch (e.kind) {
    case ErrorKind::Parse:
    case ErrorKind::Usage:
      return 2;
    default:
      return 1;
  }
}

struct CommonOpts {
  std::string input;
  std::string script_path;
  std::string costs_path;
  std::string store_text;
  std::string mode = "strict";
  std::uint64_t fuel = kDefaultFuel;
  std::uint64_t seed = 0;
  std::uint64_t trials = 100;
  bool plain = false;
  bool indexed = false;
  bool symbolic = false;
  bool from_vm = false;
  bool json_out = false;
  GenParams gen;
};

CostModel load_costs(const CommonOpts& opts) {
  if (opts.costs_path.empty()) return CostModel::standard();
  return parse_cost_model_json(read_file(opts.costs_path));
}

KappaMode kappa_mode(const CommonOpts& opts) {
  if (opts.mode == "strict") return KappaMode::Strict;
  if (opts.mode == "sound") return KappaMode::Sound;
  fail(ErrorKind::Usage, "--mode must be strict or sound");
}

json trace_json(const Trace& trace) {
  json out = json::array();
  for (const IndexedLabel& l : trace) out.push_back(trace_line(l));
  return out;
}

json store_json(const Store& store) {
  json out = json::object();
  for (const auto& [name, value] : store.vars) out[name] = value;
  return out;
}

json cost_map_json(const CostMap& kappa) {
  json entries = json::array();
  for (const LabelCost& e : kappa.entries) {
    json entry;
    entry["label"] = label_text(e.label);
    entry["cost"] = e.cost;
    entry["precise"] = e.precise;
    if (!e.precise) {
      entry["min"] = e.min_cost;
      entry["max"] = e.max_cost;
      entry["cheap_path"] = e.cheap_path;
      entry["dear_path"] = e.dear_path;
    }
    entries.push_back(entry);
  }
  return entries;
}

int cmd_label(const CommonOpts& opts) {
  StmtPtr program = parse_program(read_file(opts.input));
  StmtPtr labelled = opts.plain ? label_plain(program) : label_indexed(program);
  std::cout << pretty_print(labelled);
  return 0;
}

int cmd_transform(const CommonOpts& opts) {
  StmtPtr program = parse_program(read_file(opts.input));
  if (opts.script_path.empty()) fail(ErrorKind::Usage, "transform needs --script");
  TransformScript script = parse_script(read_file(opts.script_path));
  StmtPtr transformed = apply_script(program, script);
  NonOverlapReport report = check_non_overlap(transformed);
  if (opts.json_out) {
    json out;
    out["program"] = pretty_print(transformed);
    out["non_overlap_ok"] = report.ok();
    out["violations"] = json::array();
    for (const OverlapViolation& v : report.violations)
      out["violations"].push_back(non_overlap_text({{v}}));
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << pretty_print(transformed);
    std::cerr << non_overlap_text(report);
  }
  return report.ok() ? 0 : 1;
}

int cmd_compile(const CommonOpts& opts) {
  StmtPtr program = parse_program(read_file(opts.input));
  std::cout << vm_listing(lower(program));
  return 0;
}

int cmd_analyze(const CommonOpts& opts) {
  VmProgram program = parse_vm_listing(read_file(opts.input));
  CostModel model = load_costs(opts);
  SoundnessReport sound = check_soundness(program);
  if (!sound.ok()) {
    std::string cycle;
    for (std::int64_t a : sound.unlabelled_cycle) cycle += " " + std::to_string(a);
    if (opts.json_out) {
      json out;
      out["sound"] = false;
      out["unlabelled_cycle"] = sound.unlabelled_cycle;
      std::cout << out.dump(2) << "\n";
    } else {
      std::cout << "soundness violation: cycle without a label at addresses" << cycle << "\n";
    }
    return 1;
  }
  CostMap kappa = compute_kappa(program, model, kappa_mode(opts));
  if (opts.json_out) {
    json out;
    out["sound"] = true;
    out["labels"] = cost_map_json(kappa);
    out["precise"] = kappa.all_precise();
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << cost_map_text(kappa);
  }
  return 0;
}

int cmd_annotate(const CommonOpts& opts) {
  StmtPtr program = parse_program(read_file(opts.input));
  StmtPtr indexed = label_indexed(program);
  StmtPtr transformed = indexed;
  if (!opts.script_path.empty())
    transformed = apply_script(indexed, parse_script(read_file(opts.script_path)));
  NonOverlapReport overlap = check_non_overlap(transformed);
  if (!overlap.ok()) {
    std::cerr << non_overlap_text(overlap);
    return 1;
  }
  CostModel model = load_costs(opts);
  VmProgram compiled = lower(transformed);

  if (opts.symbolic) {
    // Per-atom dependent costs with the occurrence costs left symbolic:
    // occurrences are ordered lexicographically and named a, b, c, ...
    std::map<CostAtom, std::vector<Indexing>> occurrences;
    for (const IndexedLabel& l : collect_labels(transformed))
      occurrences[l.atom].push_back(l.indexing);
    for (auto& [atom, indexings] : occurrences) {
      std::sort(indexings.begin(), indexings.end(),
                [](const Indexing& x, const Indexing& y) {
                  for (std::size_t i = 0; i < std::min(x.entries.size(), y.entries.size());
                       ++i) {
                    const SimpleExpr& a = x.entries[i];
                    const SimpleExpr& b = y.entries[i];
                    if (!(a == b))
                      return a.coeff < b.coeff || (a.coeff == b.coeff && a.offset < b.offset);
                  }
                  return x.entries.size() < y.entries.size();
                })
          ;
      CostMap symbolic;
      std::map<std::uint64_t, std::string> names;
      std::uint64_t next = 1;
      for (const Indexing& ix : indexings) {
        LabelCost entry;
        entry.label = {atom, ix};
        entry.cost = next;
        std::string name;
        for (std::uint64_t v = next - 1;; v = v / 26 - 1) {
          name.insert(name.begin(), static_cast<char>('a' + v % 26));
          if (v < 26) break;
        }
        names[next] = name;
        ++next;
        symbolic.entries.push_back(entry);
      }
      DepCostPtr dependent = simplify(build_dependent(atom, symbolic));
      std::cout << atom << ": " << dependent_text(dependent, names) << "\n";
    }
    return 0;
  }

  CostMap kappa = compute_kappa(compiled, model, kappa_mode(opts));
  InstrumentedProgram annotated;
  if (opts.plain) {
    AtomCosts atoms = collapse_to_atoms(kappa);
    annotated = instrument_plain(label_plain(program), atoms.costs);
  } else {
    std::map<CostAtom, DepCostPtr> dependent;
    for (const LabelCost& e : kappa.entries)
      if (!dependent.count(e.label.atom))
        dependent[e.label.atom] = simplify(build_dependent(e.label.atom, kappa));
    annotated = instrument_indexed(indexed, dependent);
  }
  std::cout << pretty_print(annotated.program);
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  Store store = parse_store(opts.store_text);
  if (opts.from_vm) {
    VmProgram program = parse_vm_listing(read_file(opts.input));
    VmResult result = vm_run(program, store, load_costs(opts), opts.fuel);
    if (opts.json_out) {
      json out;
      out["trace"] = trace_json(result.trace);
      out["store"] = store_json(result.store);
      out["steps"] = result.steps;
      out["cost"] = result.actual_cost;
      std::cout << out.dump(2) << "\n";
    } else {
      std::cout << trace_text(result.trace);
      std::cout << store_text(result.store);
      std::cout << "cost = " << result.actual_cost << "\n";
    }
    return 0;
  }
  StmtPtr program = parse_program(read_file(opts.input), /*allow_reserved=*/true);
  RunResult result = run(program, store, opts.fuel);
  if (opts.json_out) {
    json out;
    out["trace"] = trace_json(result.trace);
    out["store"] = store_json(result.store);
    out["steps"] = result.steps;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << trace_text(result.trace);
    std::cout << store_text(result.store);
    std::cout << "steps = " << result.steps << "\n";
  }
  return 0;
}

int cmd_verify(const CommonOpts& opts) {
  GenParams params = opts.gen;
  params.seed = opts.seed;
  VerifyReport report = verify(params, opts.trials, opts.fuel);
  if (opts.json_out) {
    json out;
    out["trials"] = report.trials;
    out["passed"] = report.passed;
    out["failures"] = json::array();
    for (const TrialFailure& f : report.failures) {
      json fj;
      fj["trial"] = f.trial;
      fj["seed"] = f.seed;
      fj["stage"] = f.stage;
      fj["detail"] = f.detail;
      fj["program"] = f.program;
      fj["script"] = f.script;
      out["failures"].push_back(fj);
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << verify_text(report);
  }
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"source-level cost annotation via indexed labels"};
  app.require_subcommand(1);
  CommonOpts opts;

  auto add_input = [&](CLI::App* cmd) {
    cmd->add_option("input", opts.input, "input file")->required();
  };

  CLI::App* label = app.add_subcommand("label", "insert cost labels");
  add_input(label);
  label->add_flag("--plain", opts.plain, "plain labels without indexings");
  label->add_flag("--indexed", opts.indexed, "indexed labels (default)");

  CLI::App* transform = app.add_subcommand("transform", "apply a peel/unroll script");
  add_input(transform);
  transform->add_option("--script", opts.script_path, "transformation script")->required();
  transform->add_flag("--json", opts.json_out, "JSON output");

  CLI::App* compile = app.add_subcommand("compile", "lower to the instruction language");
  add_input(compile);

  CLI::App* analyze = app.add_subcommand("analyze", "static block costs of a listing");
  add_input(analyze);
  analyze->add_option("--costs", opts.costs_path, "cost model JSON file");
  analyze->add_option("--mode", opts.mode, "strict or sound (default strict)");
  analyze->add_flag("--json", opts.json_out, "JSON output");

  CLI::App* annotate = app.add_subcommand("annotate", "instrument source with costs");
  add_input(annotate);
  annotate->add_option("--script", opts.script_path, "transformation script");
  annotate->add_option("--costs", opts.costs_path, "cost model JSON file");
  annotate->add_option("--mode", opts.mode, "strict or sound (default strict)");
  annotate->add_flag("--plain", opts.plain, "per-atom costs instead of dependent ones");
  annotate->add_flag("--symbolic", opts.symbolic, "print dependent costs with symbolic leaves");

  CLI::App* run_cmd = app.add_subcommand("run", "execute a program or listing");
  add_input(run_cmd);
  run_cmd->add_flag("--vm", opts.from_vm, "input is an instruction listing");
  run_cmd->add_option("--store", opts.store_text, "initial store, k=v,...");
  run_cmd->add_option("--fuel", opts.fuel, "step budget");
  run_cmd->add_option("--costs", opts.costs_path, "cost model JSON file (listings)");
  run_cmd->add_flag("--json", opts.json_out, "JSON output");

  CLI::App* verify_cmd = app.add_subcommand("verify", "random end-to-end verification");
  verify_cmd->add_option("--seed", opts.seed, "base seed");
  verify_cmd->add_option("--trials", opts.trials, "number of trials (default 100)");
  verify_cmd->add_option("--fuel", opts.fuel, "step budget per run");
  verify_cmd->add_option("--max-depth", opts.gen.max_depth, "statement nesting depth");
  verify_cmd->add_option("--max-nesting", opts.gen.max_loop_nesting, "loop nesting depth");
  verify_cmd->add_option("--vars", opts.gen.var_pool, "variable pool size");
  verify_cmd->add_flag("--json", opts.json_out, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (label->parsed()) return cmd_label(opts);
    if (transform->parsed()) return cmd_transform(opts);
    if (compile->parsed()) return cmd_compile(opts);
    if (analyze->parsed()) return cmd_analyze(opts);
    if (annotate->parsed()) return cmd_annotate(opts);
    if (run_cmd->parsed()) return cmd_run(opts);
    if (verify_cmd->parsed()) return cmd_verify(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_of(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
