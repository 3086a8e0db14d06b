#ifndef IDXCOST_LABEL_HPP
#define IDXCOST_LABEL_HPP

// Labelling inserts cost labels at the program head and at every branch:
// both arms of each conditional (an omitted else becomes a labelled skip)
// and, for loops, the body head plus a loop-exit label. The indexed variant
// additionally attaches i_k to the k-th nested loop and gives every label
// the identity indexing of its loop depth.

#include <string>

#include "idxcost/syntax.hpp"

namespace idxcost {

inline const char* kTopAtom = "_L0";

namespace detail {

// Atom names are deterministic: "_L0" at the head, then "_a<n>"/"_b<n>"
// pairs numbered by preorder visit of branching statements.
struct LabelCounter {
  std::uint64_t next = 1;
  std::pair<CostAtom, CostAtom> fresh_pair() {
    std::string n = std::to_string(next++);
    return {"_a" + n, "_b" + n};
  }
};

inline void require_unlabelled(const StmtPtr& s) {
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    require_unlabelled(sq->first);
    require_unlabelled(sq->second);
  } else if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    require_unlabelled(i->then_branch);
    require_unlabelled(i->else_branch);
  } else if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    if (w->index) fail(ErrorKind::AlreadyLabelled, "program already carries loop indexes");
    require_unlabelled(w->body);
  } else if (std::holds_alternative<Stmt::Labelled>(s->node)) {
    fail(ErrorKind::AlreadyLabelled, "program already carries cost labels");
  }
}

// depth < 0 selects plain labelling: no loop indexes, empty indexings.
inline StmtPtr label_rec(const StmtPtr& s, LabelCounter& counter, int depth) {
  auto make = [&](std::size_t d) {
    return depth < 0 ? Indexing{} : Indexing::identity(d);
  };
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node)) {
    StmtPtr first = label_rec(sq->first, counter, depth);
    StmtPtr second = label_rec(sq->second, counter, depth);
    return seq(std::move(first), std::move(second));
  }
  if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    auto [a, b] = counter.fresh_pair();
    std::size_t d = depth < 0 ? 0 : static_cast<std::size_t>(depth);
    StmtPtr then_branch = labelled({a, make(d)}, label_rec(i->then_branch, counter, depth));
    StmtPtr else_branch = labelled({b, make(d)}, label_rec(i->else_branch, counter, depth));
    return if_(i->guard, std::move(then_branch), std::move(else_branch));
  }
  const auto& w = std::get<Stmt::While>(s->node);
  auto [a, b] = counter.fresh_pair();
  if (depth < 0) {
    StmtPtr body = labelled({a, {}}, label_rec(w.body, counter, depth));
    return seq(while_(w.guard, body), labelled({b, {}}, skip()));
  }
  std::size_t d = static_cast<std::size_t>(depth);
  StmtPtr body = labelled({a, Indexing::identity(d + 1)}, label_rec(w.body, counter, depth + 1));
  return seq(while_(w.guard, body, static_cast<IndexId>(d)),
             labelled({b, Indexing::identity(d)}, skip()));
}

}  // namespace detail

inline StmtPtr label_plain(const StmtPtr& program) {
  detail::require_unlabelled(program);
  detail::LabelCounter counter;
  return labelled({kTopAtom, {}}, detail::label_rec(program, counter, -1));
}

inline StmtPtr label_indexed(const StmtPtr& program) {
  detail::require_unlabelled(program);
  detail::LabelCounter counter;
  return labelled({kTopAtom, {}}, detail::label_rec(program, counter, 0));
}

// Forgetful erasure: removes every label and every loop index.
inline StmtPtr strip_labels(const StmtPtr& s) {
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node))
    return seq(strip_labels(sq->first), strip_labels(sq->second));
  if (auto* i = std::get_if<Stmt::If>(&s->node))
    return if_(i->guard, strip_labels(i->then_branch), strip_labels(i->else_branch));
  if (auto* w = std::get_if<Stmt::While>(&s->node))
    return while_(w->guard, strip_labels(w->body));
  return strip_labels(std::get<Stmt::Labelled>(s->node).body);
}

// Drops indexings and loop indexes but keeps the labels themselves; turns
// the output of label_indexed into the output of label_plain.
inline StmtPtr erase_indexing(const StmtPtr& s) {
  if (std::holds_alternative<Stmt::Skip>(s->node) ||
      std::holds_alternative<Stmt::Assign>(s->node))
    return s;
  if (auto* sq = std::get_if<Stmt::Seq>(&s->node))
    return seq(erase_indexing(sq->first), erase_indexing(sq->second));
  if (auto* i = std::get_if<Stmt::If>(&s->node))
    return if_(i->guard, erase_indexing(i->then_branch), erase_indexing(i->else_branch));
  if (auto* w = std::get_if<Stmt::While>(&s->node))
    return while_(w->guard, erase_indexing(w->body));
  const auto& l = std::get<Stmt::Labelled>(s->node);
  return labelled({l.label.atom, {}}, erase_indexing(l.body));
}

}  // namespace idxcost

#endif  // IDXCOST_LABEL_HPP
