#ifndef IDXCOST_GEN_HPP
#define IDXCOST_GEN_HPP

// Random programs for the verification harness. Every loop is a bounded
// counting loop over a dedicated counter variable that nothing else writes,
// so all generated programs terminate. Assigned values are reduced modulo a
// small constant, which keeps every intermediate within 64 bits no matter
// how the assignments compose.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "idxcost/syntax.hpp"
#include "idxcost/transform.hpp"

namespace idxcost {

struct GenParams {
  unsigned max_depth = 3;         // statement nesting
  unsigned max_loop_nesting = 3;  // loop nesting
  unsigned var_pool = 4;          // v0..v{n-1}
  std::uint64_t seed = 0;
};

namespace detail {

class ProgramGen {
 public:
  explicit ProgramGen(const GenParams& params) : params_(params), rng_(params.seed) {}

  StmtPtr program() {
    counter_count_ = 0;
    return stmt_list(params_.max_depth, params_.max_loop_nesting, 2 + pick(4));
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::uint64_t pick(std::uint64_t n) { return rng_() % n; }

  Ident pool_var() { return "v" + std::to_string(pick(params_.var_pool)); }

  ExprPtr value_leaf() {
    switch (pick(3)) {
      case 0: return lit(static_cast<std::int64_t>(pick(9)));
      default: return var(pool_var());
    }
  }

  ExprPtr value_expr(unsigned depth) {
    if (depth == 0 || pick(3) == 0) return value_leaf();
    switch (pick(4)) {
      case 0: return bin(BinOp::Add, value_expr(depth - 1), value_expr(depth - 1));
      case 1: return bin(BinOp::Sub, value_expr(depth - 1), value_expr(depth - 1));
      case 2: return bin(BinOp::Mul, value_expr(depth - 1), value_expr(depth - 1));
      default:
        return bin(BinOp::Mod, value_expr(depth - 1),
                   lit(static_cast<std::int64_t>(2 + pick(6))));
    }
  }

  ExprPtr guard_expr() {
    BinOp op;
    switch (pick(4)) {
      case 0: op = BinOp::Lt; break;
      case 1: op = BinOp::Le; break;
      case 2: op = BinOp::Eq; break;
      default: op = BinOp::Ne; break;
    }
    return bin(op, value_leaf(), value_leaf());
  }

  StmtPtr assignment() {
    // Clamp the stored value so chained assignments cannot blow up.
    return assign(pool_var(), bin(BinOp::Mod, value_expr(2), lit(97)));
  }

  StmtPtr counting_loop(unsigned depth, unsigned nesting) {
    Ident counter = "c" + std::to_string(counter_count_++);
    std::int64_t start = static_cast<std::int64_t>(pick(3));
    std::int64_t bound = start + static_cast<std::int64_t>(pick(5));
    std::vector<StmtPtr> body;
    unsigned n = 1 + static_cast<unsigned>(pick(2));
    for (unsigned i = 0; i < n; ++i) body.push_back(stmt(depth - 1, nesting - 1));
    body.push_back(assign(counter, bin(BinOp::Add, var(counter), lit(1))));
    return seq(assign(counter, lit(start)),
               while_(bin(BinOp::Lt, var(counter), lit(bound)), seq_of(body)));
  }

  StmtPtr stmt(unsigned depth, unsigned nesting) {
    if (depth == 0) return pick(4) == 0 ? skip() : assignment();
    switch (pick(6)) {
      case 0: return skip();
      case 1:
      case 2: return assignment();
      case 3: {
        StmtPtr then_branch = stmt_list(depth - 1, nesting, 1 + pick(2));
        StmtPtr else_branch = pick(2) == 0 ? skip() : stmt_list(depth - 1, nesting, 1 + pick(2));
        return if_(guard_expr(), then_branch, else_branch);
      }
      case 4:
        if (nesting > 0) return counting_loop(depth, nesting);
        return assignment();
      default: return stmt_list(depth - 1, nesting, 2);
    }
  }

  StmtPtr stmt_list(unsigned depth, unsigned nesting, std::uint64_t count) {
    std::vector<StmtPtr> elems;
    for (std::uint64_t i = 0; i < count; ++i) elems.push_back(stmt(depth, nesting));
    return seq_of(elems);
  }

  GenParams params_;
  std::mt19937_64 rng_;
  unsigned counter_count_ = 0;
};

}  // namespace detail

inline StmtPtr generate_program(const GenParams& params) {
  return detail::ProgramGen(params).program();
}

// A store assigning small values to the variable pool.
inline Store generate_store(const GenParams& params, std::uint64_t salt) {
  std::mt19937_64 rng(params.seed ^ (0x9e3779b97f4a7c15ull + salt));
  Store store;
  for (unsigned i = 0; i < params.var_pool; ++i)
    store.set("v" + std::to_string(i), static_cast<std::int64_t>(rng() % 7));
  return store;
}

// A random peel/unroll script against the evolving tree: each step picks one
// of the currently indexed loops uniformly.
inline TransformScript generate_script(StmtPtr labelled_program, const GenParams& params,
                                       std::uint64_t salt) {
  std::mt19937_64 rng(params.seed ^ (0xbf58476d1ce4e5b9ull + salt));
  TransformScript script;
  std::uint64_t steps = rng() % 5;
  for (std::uint64_t i = 0; i < steps; ++i) {
    auto loops = list_indexed_loops(labelled_program);
    if (loops.empty()) break;
    TransformStep step;
    step.path = loops[rng() % loops.size()].first;
    if (rng() % 2 == 0) {
      step.op = TransformStep::Op::Peel;
    } else {
      step.op = TransformStep::Op::Unroll;
      step.factor = 2 + rng() % 2;
    }
    labelled_program = step.op == TransformStep::Op::Peel
                           ? peel(labelled_program, step.path)
                           : unroll(labelled_program, step.path, step.factor);
    script.push_back(std::move(step));
  }
  return script;
}

}  // namespace idxcost

#endif  // IDXCOST_GEN_HPP
