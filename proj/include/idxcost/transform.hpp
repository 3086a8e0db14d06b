#ifndef IDXCOST_TRANSFORM_HPP
#define IDXCOST_TRANSFORM_HPP

// Loop peeling and unrolling on indexed-labelled programs. Both rewrites
// reindex the duplicated label occurrences so that each occurrence still
// names the original iterations it stands for:
//
//   peel:    @ik while b do S
//         -> if b then { S∘(ik->0); @ik while b do S∘(ik->ik+1) }
//   unroll:  @ik while b do S
//         -> @ik while b do { S∘(ik->n*ik);
//              if b then { S∘(ik->n*ik+1); ... if b then { S∘(ik->n*ik+n-1) }}}
//
// Loops are addressed by explicit child-selector paths; scripts are lists
// of (operation, path) applied in order against the evolving tree.

#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/syntax.hpp"
#include "idxcost/text.hpp"

namespace idxcost {

enum class PathStep { SeqL, SeqR, IfThen, IfElse, WhileBody, LabelBody };

struct LoopPath {
  std::vector<PathStep> steps;

  friend bool operator==(const LoopPath& a, const LoopPath& b) { return a.steps == b.steps; }
};

inline const char* path_step_text(PathStep s) {
  switch (s) {
    case PathStep::SeqL: return "seqL";
    case PathStep::SeqR: return "seqR";
    case PathStep::IfThen: return "ifThen";
    case PathStep::IfElse: return "ifElse";
    case PathStep::WhileBody: return "whileBody";
    case PathStep::LabelBody: return "labelBody";
  }
  return "?";
}

inline std::string path_text(const LoopPath& p) {
  if (p.steps.empty()) return ".";
  std::string out;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    if (i) out += "/";
    out += path_step_text(p.steps[i]);
  }
  return out;
}

inline LoopPath parse_path(const std::string& text) {
  LoopPath p;
  if (text == ".") return p;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (part == "seqL") p.steps.push_back(PathStep::SeqL);
    else if (part == "seqR") p.steps.push_back(PathStep::SeqR);
    else if (part == "ifThen") p.steps.push_back(PathStep::IfThen);
    else if (part == "ifElse") p.steps.push_back(PathStep::IfElse);
    else if (part == "whileBody") p.steps.push_back(PathStep::WhileBody);
    else if (part == "labelBody") p.steps.push_back(PathStep::LabelBody);
    else fail(ErrorKind::BadPath, "unknown path selector '" + part + "'");
  }
  return p;
}

namespace detail {

// Rebuilds the tree with the node at `path` replaced by rewrite(node).
template <typename Rewrite>
StmtPtr rewrite_at(const StmtPtr& s, const LoopPath& path, std::size_t at, Rewrite&& rewrite) {
  if (at == path.steps.size()) return rewrite(s);
  PathStep step = path.steps[at];
  auto bad = [&] {
    fail(ErrorKind::BadPath, "path step " + std::to_string(at + 1) + " (" +
                                 path_step_text(step) + ") does not match the tree");
  };
  switch (step) {
    case PathStep::SeqL: {
      auto* sq = std::get_if<Stmt::Seq>(&s->node);
      if (!sq) bad();
      return seq(rewrite_at(sq->first, path, at + 1, rewrite), sq->second);
    }
    case PathStep::SeqR: {
      auto* sq = std::get_if<Stmt::Seq>(&s->node);
      if (!sq) bad();
      return seq(sq->first, rewrite_at(sq->second, path, at + 1, rewrite));
    }
    case PathStep::IfThen: {
      auto* i = std::get_if<Stmt::If>(&s->node);
      if (!i) bad();
      return if_(i->guard, rewrite_at(i->then_branch, path, at + 1, rewrite), i->else_branch);
    }
    case PathStep::IfElse: {
      auto* i = std::get_if<Stmt::If>(&s->node);
      if (!i) bad();
      return if_(i->guard, i->then_branch, rewrite_at(i->else_branch, path, at + 1, rewrite));
    }
    case PathStep::WhileBody: {
      auto* w = std::get_if<Stmt::While>(&s->node);
      if (!w) bad();
      return while_(w->guard, rewrite_at(w->body, path, at + 1, rewrite), w->index);
    }
    case PathStep::LabelBody: {
      auto* l = std::get_if<Stmt::Labelled>(&s->node);
      if (!l) bad();
      return labelled(l->label, rewrite_at(l->body, path, at + 1, rewrite));
    }
  }
  bad();
  __builtin_unreachable();
}

inline const Stmt::While& expect_indexed_loop(const StmtPtr& s) {
  auto* w = std::get_if<Stmt::While>(&s->node);
  if (!w || !w->index)
    fail(ErrorKind::BadPath, "path does not resolve to an indexed loop");
  return *w;
}

}  // namespace detail

inline StmtPtr peel(const StmtPtr& s, const LoopPath& path) {
  return detail::rewrite_at(s, path, 0, [](const StmtPtr& node) {
    const auto& w = detail::expect_indexed_loop(node);
    IndexId k = *w.index;
    StmtPtr peeled = reindex_stmt(w.body, k, SimpleExpr::constant(k, 0));
    StmtPtr rest = reindex_stmt(w.body, k, SimpleExpr::affine(1, k, 1));
    return if_(w.guard, seq(peeled, while_(w.guard, rest, k)), skip());
  });
}

inline StmtPtr unroll(const StmtPtr& s, const LoopPath& path, std::uint64_t n) {
  if (n < 2) fail(ErrorKind::InvalidFactor, "unroll factor must be at least 2");
  return detail::rewrite_at(s, path, 0, [n](const StmtPtr& node) {
    const auto& w = detail::expect_indexed_loop(node);
    IndexId k = *w.index;
    StmtPtr body;
    for (std::uint64_t j = n; j-- > 0;) {
      StmtPtr copy = reindex_stmt(w.body, k, SimpleExpr::affine(n, k, j));
      if (!body)
        body = copy;
      else
        body = seq(copy, if_(w.guard, body, skip()));
    }
    return while_(w.guard, body, k);
  });
}

struct TransformStep {
  enum class Op { Peel, Unroll } op;
  std::uint64_t factor = 0;  // unroll only
  LoopPath path;
};

using TransformScript = std::vector<TransformStep>;

// Steps address the current, already-transformed tree; the first failing
// step is reported with its position.
inline StmtPtr apply_script(StmtPtr s, const TransformScript& script) {
  for (std::size_t i = 0; i < script.size(); ++i) {
    const TransformStep& step = script[i];
    try {
      s = step.op == TransformStep::Op::Peel ? peel(s, step.path)
                                             : unroll(s, step.path, step.factor);
    } catch (const Error& e) {
      fail(e.kind, "script step " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return s;
}

inline std::string script_text(const TransformScript& script) {
  std::string out;
  for (const TransformStep& step : script) {
    if (step.op == TransformStep::Op::Peel)
      out += "peel " + path_text(step.path) + "\n";
    else
      out += "unroll " + std::to_string(step.factor) + " " + path_text(step.path) + "\n";
  }
  return out;
}

// One step per line: `peel <path>` or `unroll <n> <path>`; blank lines and
// `#` comments are skipped.
inline TransformScript parse_script(const std::string& text) {
  TransformScript script;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string op;
    if (!(ls >> op)) continue;
    TransformStep step;
    if (op == "peel") {
      step.op = TransformStep::Op::Peel;
    } else if (op == "unroll") {
      step.op = TransformStep::Op::Unroll;
      if (!(ls >> step.factor))
        fail(ErrorKind::Parse, "script line " + std::to_string(lineno) + ": missing factor");
    } else {
      fail(ErrorKind::Parse,
           "script line " + std::to_string(lineno) + ": unknown operation '" + op + "'");
    }
    std::string path;
    if (!(ls >> path))
      fail(ErrorKind::Parse, "script line " + std::to_string(lineno) + ": missing path");
    step.path = parse_path(path);
    std::string extra;
    if (ls >> extra)
      fail(ErrorKind::Parse, "script line " + std::to_string(lineno) + ": trailing input");
    script.push_back(std::move(step));
  }
  return script;
}

// Preorder enumeration of indexed while nodes.
namespace detail {
inline void list_loops_rec(const StmtPtr& s, LoopPath& here,
                           std::vector<std::pair<LoopPath, IndexId>>& out) {
  auto descend = [&](PathStep step, const StmtPtr& child) {
    here.steps.push_back(step);
    list_loops_rec(child, here, out);
    here.steps.pop_back();
  };
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    descend(PathStep::SeqL, sq->first);
    descend(PathStep::SeqR, sq->second);
  } else if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    descend(PathStep::IfThen, i->then_branch);
    descend(PathStep::IfElse, i->else_branch);
  } else if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    if (w->index) out.emplace_back(here, *w->index);
    descend(PathStep::WhileBody, w->body);
  } else if (auto* l = std::get_if<Stmt::Labelled>(&s->node)) {
    descend(PathStep::LabelBody, l->body);
  }
}
}  // namespace detail

inline std::vector<std::pair<LoopPath, IndexId>> list_indexed_loops(const StmtPtr& s) {
  std::vector<std::pair<LoopPath, IndexId>> out;
  LoopPath here;
  detail::list_loops_rec(s, here, out);
  return out;
}

// ---------------------------------------------------------------------------
// Non-overlap: distinct indexings of one atom must denote disjoint iteration
// sets. The image of a*x+b over the naturals is {b} when a = 0 and the
// congruence class b mod a from b upward otherwise, so intersection is
// decidable by gcd reasoning.

inline bool images_disjoint(const SimpleExpr& e1, const SimpleExpr& e2) {
  if (e1.coeff == 0 && e2.coeff == 0) return e1.offset != e2.offset;
  if (e1.coeff == 0 || e2.coeff == 0) {
    const SimpleExpr& c = e1.coeff == 0 ? e1 : e2;
    const SimpleExpr& m = e1.coeff == 0 ? e2 : e1;
    return c.offset < m.offset || (c.offset - m.offset) % m.coeff != 0;
  }
  // Both images are unbounded arithmetic progressions; they meet iff the
  // congruences x = b1 (mod a1), x = b2 (mod a2) are compatible, and any
  // solution class has members above both offsets.
  std::uint64_t g = std::gcd(e1.coeff, e2.coeff);
  std::uint64_t r1 = e1.offset % g, r2 = e2.offset % g;
  return r1 != r2;
}

struct OverlapViolation {
  CostAtom atom;
  Indexing first, second;
  // Position of the offending pair of simple expressions.
  IndexId position = 0;
  bool prefix_clause = false;  // tripped the inside/outside-loop prefix check
};

struct NonOverlapReport {
  std::vector<OverlapViolation> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

inline void check_pairwise(const std::map<CostAtom, std::vector<Indexing>>& by_atom,
                           NonOverlapReport& report) {
  for (const auto& [atom, occs] : by_atom) {
    for (std::size_t i = 0; i < occs.size(); ++i) {
      for (std::size_t j = i + 1; j < occs.size(); ++j) {
        const Indexing& a = occs[i];
        const Indexing& b = occs[j];
        if (a == b) {
          // Two syntactic occurrences with identical indexings always name
          // the same iterations.
          report.violations.push_back({atom, a, b, a.start, false});
          continue;
        }
        std::size_t len = std::min(a.entries.size(), b.entries.size());
        for (std::size_t p = 0; p < len; ++p) {
          if (a.entries[p] == b.entries[p]) continue;
          if (!images_disjoint(a.entries[p], b.entries[p]))
            report.violations.push_back(
                {atom, a, b, static_cast<IndexId>(p + a.start), false});
          break;
        }
      }
    }
  }
}

inline void collect_by_atom(const StmtPtr& s, std::map<CostAtom, std::vector<Indexing>>& out) {
  for (const IndexedLabel& l : collect_labels(s)) out[l.atom].push_back(l.indexing);
}

// Labels inside a loop on i_k versus same-atom labels outside it: they must
// not agree on the prefix below i_k while overlapping at i_k itself.
inline void check_loop_prefixes(const StmtPtr& root, NonOverlapReport& report) {
  std::map<CostAtom, std::vector<Indexing>> all;
  collect_by_atom(root, all);

  struct Walker {
    const std::map<CostAtom, std::vector<Indexing>>& all;
    NonOverlapReport& report;

    void visit(const StmtPtr& s) {
      if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
        visit(sq->first);
        visit(sq->second);
      } else if (auto* i = std::get_if<Stmt::If>(&s->node)) {
        visit(i->then_branch);
        visit(i->else_branch);
      } else if (auto* w = std::get_if<Stmt::While>(&s->node)) {
        if (w->index) check_loop(*w->index, w->body);
        visit(w->body);
      } else if (auto* l = std::get_if<Stmt::Labelled>(&s->node)) {
        visit(l->body);
      }
    }

    void check_loop(IndexId k, const StmtPtr& body) {
      std::map<CostAtom, std::vector<Indexing>> inside;
      collect_by_atom(body, inside);
      for (const auto& [atom, inner_occs] : inside) {
        auto it = all.find(atom);
        if (it == all.end()) continue;
        for (const Indexing& inner : inner_occs) {
          if (!inner.contains(k)) continue;
          for (const Indexing& outer : it->second) {
            if (outer == inner) continue;
            bool is_inside = false;
            for (const Indexing& occ : inner_occs)
              if (occ == outer) is_inside = true;
            if (is_inside) continue;
            if (!outer.contains(k)) continue;
            bool same_prefix = true;
            for (IndexId p = 0; p < k && same_prefix; ++p)
              same_prefix = inner.contains(p) && outer.contains(p) &&
                            inner.at(p) == outer.at(p);
            if (same_prefix && !images_disjoint(inner.at(k), outer.at(k)))
              report.violations.push_back({atom, inner, outer, k, true});
          }
        }
      }
    }
  } walker{all, report};
  walker.visit(root);
}

}  // namespace detail

inline NonOverlapReport check_non_overlap(const StmtPtr& s) {
  NonOverlapReport report;
  std::map<CostAtom, std::vector<Indexing>> by_atom;
  detail::collect_by_atom(s, by_atom);
  detail::check_pairwise(by_atom, report);
  detail::check_loop_prefixes(s, report);
  return report;
}

inline std::string non_overlap_text(const NonOverlapReport& report) {
  if (report.ok()) return "non-overlap: ok\n";
  std::ostringstream os;
  for (const OverlapViolation& v : report.violations) {
    IndexedLabel a{v.atom, v.first}, b{v.atom, v.second};
    os << "non-overlap violation: " << label_text(a) << " vs " << label_text(b) << " at i"
       << v.position << (v.prefix_clause ? " (loop prefix)" : "") << "\n";
  }
  return os.str();
}

}  // namespace idxcost

#endif  // IDXCOST_TRANSFORM_HPP
