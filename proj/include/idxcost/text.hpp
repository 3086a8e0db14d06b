#ifndef IDXCOST_TEXT_HPP
#define IDXCOST_TEXT_HPP

// Concrete syntax:
//   stmt  := "skip" | ident ":=" expr | stmt ";" stmt
//          | "if" expr "then" block ["else" block]
//          | ["@i" nat] "while" expr "do" block
//          | "_" ident "<" [sexpr ("," sexpr)*] ">" ":" stmt
//          | block
//   block := "{" stmt "}"
//   sexpr := nat | "i" nat | nat "*i" nat ["+" nat] | "i" nat "+" nat
// A label binds the single statement after the colon; a braced block groups
// a sequence under one label. Expressions are C-like:
//   ?: < ||  < && < (< <= == !=) < (+ -) < (* %), with unary minus on
// literals only. `#` starts a comment running to end of line.

#include <cerrno>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "idxcost/syntax.hpp"

namespace idxcost {

// ---------------------------------------------------------------------------
// Printing.

inline std::string simple_expr_text(const SimpleExpr& e) {
  std::ostringstream os;
  if (e.coeff == 0) {
    os << e.offset;
  } else {
    if (e.coeff != 1) os << e.coeff << "*";
    os << "i" << e.index;
    if (e.offset != 0) os << "+" << e.offset;
  }
  return os.str();
}

inline std::string label_text(const IndexedLabel& label) {
  std::ostringstream os;
  os << label.atom << "<";
  for (std::size_t j = 0; j < label.indexing.entries.size(); ++j) {
    if (j) os << ", ";
    os << simple_expr_text(label.indexing.entries[j]);
  }
  os << ">";
  return os.str();
}

namespace detail {

// Precedence levels, loosest first.
enum : int {
  kPrecTernary = 1,
  kPrecOr = 2,
  kPrecAnd = 3,
  kPrecCompare = 4,
  kPrecAdd = 5,
  kPrecMul = 6,
  kPrecAtom = 7,
};

inline int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::Or: return kPrecOr;
    case BinOp::And: return kPrecAnd;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Eq:
    case BinOp::Ne: return kPrecCompare;
    case BinOp::Add:
    case BinOp::Sub: return kPrecAdd;
    case BinOp::Mul:
    case BinOp::Mod: return kPrecMul;
  }
  return kPrecAtom;
}

inline const char* binop_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Mod: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
  }
  return "?";
}

inline void print_expr(std::ostream& os, const ExprPtr& e, int min_prec) {
  if (auto* l = std::get_if<Expr::Lit>(&e->node)) {
    os << l->value;
    return;
  }
  if (auto* v = std::get_if<Expr::Var>(&e->node)) {
    os << v->name;
    return;
  }
  if (auto* b = std::get_if<Expr::Bin>(&e->node)) {
    int prec = binop_prec(b->op);
    bool parens = prec < min_prec;
    if (parens) os << "(";
    // +,-,*,%,&&,|| associate left; comparisons do not chain.
    int lhs_min = (prec == kPrecCompare) ? prec + 1 : prec;
    print_expr(os, b->lhs, lhs_min);
    os << " " << binop_text(b->op) << " ";
    print_expr(os, b->rhs, prec + 1);
    if (parens) os << ")";
    return;
  }
  const auto& c = std::get<Expr::Cond>(e->node);
  bool parens = kPrecTernary < min_prec;
  if (parens) os << "(";
  print_expr(os, c.test, kPrecTernary + 1);
  os << " ? ";
  print_expr(os, c.then_e, kPrecTernary);
  os << " : ";
  print_expr(os, c.else_e, kPrecTernary);
  if (parens) os << ")";
}

inline void print_stmt(std::ostream& os, const StmtPtr& s, int indent);

inline void print_indent(std::ostream& os, int indent) {
  for (int i = 0; i < indent; ++i) os << "  ";
}

inline void print_block(std::ostream& os, const StmtPtr& s, int indent) {
  os << "{\n";
  print_indent(os, indent + 1);
  print_stmt(os, s, indent + 1);
  os << "\n";
  print_indent(os, indent);
  os << "}";
}

inline void print_stmt(std::ostream& os, const StmtPtr& s, int indent) {
  if (std::holds_alternative<Stmt::Skip>(s->node)) {
    os << "skip";
    return;
  }
  if (auto* a = std::get_if<Stmt::Assign>(&s->node)) {
    os << a->target << " := ";
    print_expr(os, a->value, 0);
    return;
  }
  if (std::holds_alternative<Stmt::Seq>(s->node)) {
    auto elems = seq_elements(s);
    for (std::size_t i = 0; i < elems.size(); ++i) {
      if (i) {
        os << ";\n";
        print_indent(os, indent);
      }
      print_stmt(os, elems[i], indent);
    }
    return;
  }
  if (auto* i = std::get_if<Stmt::If>(&s->node)) {
    os << "if ";
    print_expr(os, i->guard, 0);
    os << " then ";
    print_block(os, i->then_branch, indent);
    if (!is_skip(i->else_branch)) {
      os << " else ";
      print_block(os, i->else_branch, indent);
    }
    return;
  }
  if (auto* w = std::get_if<Stmt::While>(&s->node)) {
    if (w->index) os << "@i" << *w->index << " ";
    os << "while ";
    print_expr(os, w->guard, 0);
    os << " do ";
    print_block(os, w->body, indent);
    return;
  }
  const auto& l = std::get<Stmt::Labelled>(s->node);
  os << label_text(l.label) << ": ";
  if (is_seq(l.body))
    print_block(os, l.body, indent);
  else
    print_stmt(os, l.body, indent);
}

}  // namespace detail

inline std::string expr_text(const ExprPtr& e) {
  std::ostringstream os;
  detail::print_expr(os, e, 0);
  return os.str();
}

inline std::string pretty_print(const StmtPtr& s) {
  std::ostringstream os;
  detail::print_stmt(os, s, 0);
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

struct Token {
  enum class Kind { Ident, Nat, Sym, End } kind;
  std::string text;
  std::uint64_t nat = 0;
  int line = 0, col = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_space();
    int line = line_, col = col_;
    if (pos_ >= src_.size()) {
      tok_ = {Token::Kind::End, "", 0, line, col};
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_'))
        bump();
      tok_ = {Token::Kind::Ident, src_.substr(start, pos_ - start), 0, line, col};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) bump();
      std::string text = src_.substr(start, pos_ - start);
      errno = 0;
      std::uint64_t v = std::strtoull(text.c_str(), nullptr, 10);
      if (errno != 0) fail(ErrorKind::Parse, loc() + ": numeric literal out of range");
      tok_ = {Token::Kind::Nat, text, v, line, col};
      return;
    }
    for (const char* sym : {":=", "<=", "==", "!=", "&&", "||"}) {
      if (src_.compare(pos_, 2, sym) == 0) {
        tok_ = {Token::Kind::Sym, sym, 0, line, col};
        bump();
        bump();
        return;
      }
    }
    static const std::string singles = ";<>+-*%?:(){}@,=";
    if (singles.find(c) != std::string::npos) {
      tok_ = {Token::Kind::Sym, std::string(1, c), 0, line, col};
      bump();
      return;
    }
    fail(ErrorKind::Parse, loc() + ": unexpected character '" + std::string(1, c) + "'");
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string loc() const { return std::to_string(line_) + ":" + std::to_string(col_); }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(const std::string& src, bool allow_reserved)
      : lex_(src), allow_reserved_(allow_reserved) {}

  StmtPtr parse_program() {
    StmtPtr s = parse_stmt();
    expect_end();
    return s;
  }

  ExprPtr parse_expression() {
    ExprPtr e = parse_expr();
    expect_end();
    return e;
  }

 private:
  [[noreturn]] void error(const Token& t, const std::string& msg) {
    fail(ErrorKind::Parse,
         std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + msg);
  }

  bool at_sym(const std::string& s) {
    return lex_.peek().kind == Token::Kind::Sym && lex_.peek().text == s;
  }
  bool at_ident(const std::string& s) {
    return lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == s;
  }
  bool eat_sym(const std::string& s) {
    if (!at_sym(s)) return false;
    lex_.next();
    return true;
  }
  void expect_sym(const std::string& s) {
    if (!eat_sym(s)) error(lex_.peek(), "expected '" + s + "'");
  }
  void expect_end() {
    if (lex_.peek().kind != Token::Kind::End) error(lex_.peek(), "trailing input");
  }

  static bool is_keyword(const std::string& s) {
    return s == "skip" || s == "if" || s == "then" || s == "else" || s == "while" || s == "do";
  }

  Ident parse_var_name() {
    Token t = lex_.next();
    if (t.kind != Token::Kind::Ident || is_keyword(t.text))
      error(t, "expected identifier");
    if (!allow_reserved_ && is_reserved_ident(t.text))
      error(t, "identifier '" + t.text + "' is reserved for instrumentation");
    return t.text;
  }

  // Statements: seq of atoms separated by ';'.
  StmtPtr parse_stmt() {
    std::vector<StmtPtr> elems;
    elems.push_back(parse_stmt_atom());
    while (eat_sym(";")) elems.push_back(parse_stmt_atom());
    return elems.size() == 1 ? elems[0] : seq_of(elems);
  }

  StmtPtr parse_stmt_atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::Sym && t.text == "{") {
      lex_.next();
      StmtPtr s = parse_stmt();
      expect_sym("}");
      return s;
    }
    if (t.kind == Token::Kind::Sym && t.text == "@") return parse_while();
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "skip") {
        lex_.next();
        return skip();
      }
      if (t.text == "if") return parse_if();
      if (t.text == "while") return parse_while();
      if (t.text[0] == '_') return parse_labelled();
      Ident name = parse_var_name();
      expect_sym(":=");
      return assign(name, parse_expr());
    }
    error(t, "expected statement");
  }

  StmtPtr parse_block() {
    expect_sym("{");
    StmtPtr s = parse_stmt();
    expect_sym("}");
    return s;
  }

  StmtPtr parse_if() {
    lex_.next();  // if
    ExprPtr guard = parse_expr();
    if (!at_ident("then")) error(lex_.peek(), "expected 'then'");
    lex_.next();
    StmtPtr then_branch = parse_block();
    StmtPtr else_branch = skip();
    if (at_ident("else")) {
      lex_.next();
      else_branch = parse_block();
    }
    return if_(std::move(guard), std::move(then_branch), std::move(else_branch));
  }

  std::optional<IndexId> parse_loop_index() {
    if (!eat_sym("@")) return std::nullopt;
    Token t = lex_.next();
    if (t.kind != Token::Kind::Ident || t.text.size() < 2 || t.text[0] != 'i')
      error(t, "expected loop index after '@'");
    for (std::size_t i = 1; i < t.text.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
        error(t, "expected loop index after '@'");
    return static_cast<IndexId>(std::strtoul(t.text.c_str() + 1, nullptr, 10));
  }

  StmtPtr parse_while() {
    std::optional<IndexId> index = parse_loop_index();
    if (!at_ident("while")) error(lex_.peek(), "expected 'while'");
    lex_.next();
    ExprPtr guard = parse_expr();
    if (!at_ident("do")) error(lex_.peek(), "expected 'do'");
    lex_.next();
    StmtPtr body = parse_block();
    return while_(std::move(guard), std::move(body), index);
  }

  StmtPtr parse_labelled() {
    Token t = lex_.next();  // atom, including leading underscore
    IndexedLabel label;
    label.atom = t.text;
    expect_sym("<");
    if (!at_sym(">")) {
      IndexId position = 0;
      label.indexing.entries.push_back(parse_sexpr(position++));
      while (eat_sym(",")) label.indexing.entries.push_back(parse_sexpr(position++));
    }
    expect_sym(">");
    expect_sym(":");
    return labelled(std::move(label), parse_stmt_atom());
  }

  // sexpr at a given position; explicit indexes must match the position.
  SimpleExpr parse_sexpr(IndexId position) {
    Token t = lex_.next();
    if (t.kind == Token::Kind::Nat) {
      if (eat_sym("*")) {
        IndexId k = parse_formal_index();
        std::uint64_t b = 0;
        if (eat_sym("+")) b = parse_nat();
        if (k != position) error(t, "index i" + std::to_string(k) + " out of position");
        return SimpleExpr::affine(t.nat, k, b);
      }
      return SimpleExpr::constant(position, t.nat);
    }
    if (t.kind == Token::Kind::Ident && t.text.size() >= 2 && t.text[0] == 'i') {
      IndexId k = index_of(t);
      std::uint64_t b = 0;
      if (eat_sym("+")) b = parse_nat();
      if (k != position) error(t, "index i" + std::to_string(k) + " out of position");
      return SimpleExpr::affine(1, k, b);
    }
    error(t, "expected simple expression");
  }

  IndexId parse_formal_index() {
    Token t = lex_.next();
    return index_of(t);
  }

  IndexId index_of(const Token& t) {
    if (t.kind != Token::Kind::Ident || t.text.size() < 2 || t.text[0] != 'i')
      error(t, "expected formal index");
    for (std::size_t i = 1; i < t.text.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
        error(t, "expected formal index");
    return static_cast<IndexId>(std::strtoul(t.text.c_str() + 1, nullptr, 10));
  }

  std::uint64_t parse_nat() {
    Token t = lex_.next();
    if (t.kind != Token::Kind::Nat) error(t, "expected natural number");
    return t.nat;
  }

  // Expressions.
  ExprPtr parse_expr() { return parse_ternary(); }

  ExprPtr parse_ternary() {
    ExprPtr test = parse_or();
    if (!eat_sym("?")) return test;
    ExprPtr a = parse_ternary();
    expect_sym(":");
    ExprPtr b = parse_ternary();
    return cond(std::move(test), std::move(a), std::move(b));
  }

  ExprPtr parse_or() {
    ExprPtr e = parse_and();
    while (eat_sym("||")) e = bin(BinOp::Or, std::move(e), parse_and());
    return e;
  }

  ExprPtr parse_and() {
    ExprPtr e = parse_compare();
    while (eat_sym("&&")) e = bin(BinOp::And, std::move(e), parse_compare());
    return e;
  }

  ExprPtr parse_compare() {
    ExprPtr e = parse_addsub();
    if (at_sym("<") || at_sym("<=") || at_sym("==") || at_sym("!=")) {
      std::string op = lex_.next().text;
      ExprPtr rhs = parse_addsub();
      BinOp b = op == "<" ? BinOp::Lt : op == "<=" ? BinOp::Le : op == "==" ? BinOp::Eq
                                                                            : BinOp::Ne;
      return bin(b, std::move(e), std::move(rhs));
    }
    return e;
  }

  ExprPtr parse_addsub() {
    ExprPtr e = parse_muldiv();
    while (at_sym("+") || at_sym("-")) {
      BinOp op = lex_.next().text == "+" ? BinOp::Add : BinOp::Sub;
      e = bin(op, std::move(e), parse_muldiv());
    }
    return e;
  }

  ExprPtr parse_muldiv() {
    ExprPtr e = parse_atom();
    while (at_sym("*") || at_sym("%")) {
      BinOp op = lex_.next().text == "*" ? BinOp::Mul : BinOp::Mod;
      e = bin(op, std::move(e), parse_atom());
    }
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Kind::Sym && t.text == "(") {
      lex_.next();
      ExprPtr e = parse_expr();
      expect_sym(")");
      return e;
    }
    if (t.kind == Token::Kind::Sym && t.text == "-") {
      lex_.next();
      Token n = lex_.next();
      if (n.kind != Token::Kind::Nat) error(n, "expected numeral after '-'");
      if (n.nat > static_cast<std::uint64_t>(INT64_MAX) + 1)
        error(n, "numeral out of range");
      std::int64_t v = n.nat == static_cast<std::uint64_t>(INT64_MAX) + 1
                           ? INT64_MIN
                           : -static_cast<std::int64_t>(n.nat);
      return lit(v);
    }
    if (t.kind == Token::Kind::Nat) {
      Token n = lex_.next();
      if (n.nat > static_cast<std::uint64_t>(INT64_MAX)) error(n, "numeral out of range");
      return lit(static_cast<std::int64_t>(n.nat));
    }
    if (t.kind == Token::Kind::Ident && !is_keyword(t.text)) return var(parse_var_name());
    error(t, "expected expression");
  }

  Lexer lex_;
  bool allow_reserved_;
};

}  // namespace detail

// Parses a statement; identifiers reserved for instrumentation are rejected
// unless allow_reserved is set (used when re-running instrumented output).
inline StmtPtr parse_program(const std::string& src, bool allow_reserved = false) {
  return detail::Parser(src, allow_reserved).parse_program();
}

inline ExprPtr parse_expr_text(const std::string& src, bool allow_reserved = true) {
  return detail::Parser(src, allow_reserved).parse_expression();
}

}  // namespace idxcost

#endif  // IDXCOST_TEXT_HPP
