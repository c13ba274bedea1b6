#include "spinlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace spinlab::expr {

struct Parser {
  const std::string& s;
  int dim;
  Expression* out;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ShapeError("expression \"" + s + "\": " + what + " at position " +
                     std::to_string(pos));
  }

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  int emit(Expression::Op op, int a = -1, int b = -1, double v = 0.0) {
    out->nodes_.push_back({op, a, b, v});
    return static_cast<int>(out->nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = emit(Expression::Op::kAdd, lhs, term());
      else if (eat('-'))
        lhs = emit(Expression::Op::kSub, lhs, term());
      else
        return lhs;
    }
  }

  int term() {
    int lhs = factor();
    while (eat('*')) lhs = emit(Expression::Op::kMul, lhs, factor());
    return lhs;
  }

  int factor() {
    if (eat('-')) return emit(Expression::Op::kNeg, factor());
    return primary();
  }

  int primary() {
    skip();
    if (pos >= s.size()) fail("unexpected end of input");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos;
      int e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    // coordinate x<digit> before general identifiers, so that "x1" is not
    // mistaken for a function name
    if (c == 'x' && pos + 1 < s.size() &&
        std::isdigit(static_cast<unsigned char>(s[pos + 1]))) {
      size_t start = ++pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      int idx = std::atoi(s.substr(start, pos - start).c_str());
      if (idx < 1 || idx > dim)
        fail("coordinate x" + std::to_string(idx) + " out of range (dimension " +
             std::to_string(dim) + ")");
      return emit(Expression::Op::kCoord, -1, -1, static_cast<double>(idx - 1));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
      std::string name = s.substr(start, pos - start);
      Expression::Op op;
      if (name == "sin")
        op = Expression::Op::kSin;
      else if (name == "cos")
        op = Expression::Op::kCos;
      else if (name == "exp")
        op = Expression::Op::kExp;
      else
        fail("unknown function or symbol '" + name + "'");
      if (!eat('(')) fail("expected '(' after '" + name + "'");
      int e = expr();
      if (!eat(')')) fail("expected ')'");
      return emit(op, e);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int number() {
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos += static_cast<size_t>(end - begin);
    return emit(Expression::Op::kConst, -1, -1, v);
  }
};

Expression Expression::parse(const std::string& src, int dim) {
  if (dim < 1) throw ShapeError("expression dimension must be positive");
  Expression e;
  e.src_ = src;
  Parser p{src, dim, &e};
  e.root_ = p.expr();
  p.skip();
  if (p.pos != src.size()) p.fail("trailing input");
  return e;
}

double Expression::eval_node(int i, const Vec& x) const {
  const Node& n = nodes_[static_cast<size_t>(i)];
  switch (n.op) {
    case Op::kConst:
      return n.value;
    case Op::kCoord:
      return x[static_cast<long>(n.value)];
    case Op::kAdd:
      return eval_node(n.a, x) + eval_node(n.b, x);
    case Op::kSub:
      return eval_node(n.a, x) - eval_node(n.b, x);
    case Op::kMul:
      return eval_node(n.a, x) * eval_node(n.b, x);
    case Op::kNeg:
      return -eval_node(n.a, x);
    case Op::kSin:
      return std::sin(eval_node(n.a, x));
    case Op::kCos:
      return std::cos(eval_node(n.a, x));
    case Op::kExp:
      return std::exp(eval_node(n.a, x));
  }
  throw NumericalError("corrupt expression node");
}

double Expression::eval(const Vec& x) const {
  if (root_ < 0) throw ShapeError("empty expression");
  return eval_node(root_, x);
}

}  // namespace spinlab::expr
