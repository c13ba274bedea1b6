#pragma once

#include <string>
#include <vector>

#include "spinlab/types.hpp"

namespace spinlab::expr {

// Tiny arithmetic grammar over torus coordinates, used by declarative field
// specs in run configs:
//
//   expr    := term (('+' | '-') term)*
//   term    := factor ('*' factor)*
//   factor  := '-' factor | primary
//   primary := number | 'x'<digit> | ('sin'|'cos'|'exp') '(' expr ')'
//            | '(' expr ')'
//
// Coordinates are x1..x<dim> (1-based).  Numbers are nonnegative decimal
// literals (optionally with exponent); negative constants go through the
// unary minus.  Parse failures throw ShapeError with the offending position.
class Expression {
 public:
  static Expression parse(const std::string& src, int dim);

  double eval(const Vec& x) const;
  const std::string& source() const { return src_; }

 private:
  friend struct Parser;
  enum class Op { kConst, kCoord, kAdd, kSub, kMul, kNeg, kSin, kCos, kExp };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double value = 0.0;  // constant value, or coordinate index for kCoord
  };
  double eval_node(int i, const Vec& x) const;

  std::string src_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace spinlab::expr
