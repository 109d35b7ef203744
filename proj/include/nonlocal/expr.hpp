#pragma once

#include <memory>
#include <string>

#include "nonlocal/domain.hpp"
#include "nonlocal/operator.hpp"

namespace nonlocal {

// Arithmetic expressions for right-hand sides and exterior data:
//   expr  := term (('+' | '-') term)*
//   term  := unary (('*' | '/') unary)*
//   unary := ('+' | '-') unary | power
//   power := atom ('^' unary)?            right associative
//   atom  := number | 'x' | 'y' | 'd' | 'pi' | fn '(' expr ')' | '(' expr ')'
//   fn    := 'sin' | 'cos' | 'exp'
// x and y are coordinates, d the distance to the boundary (0 outside D).
// Parse errors throw SchemaError with pointer `where` and the column.
class Expression {
 public:
  struct Node;

  Expression() = default;
  static Expression parse(const std::string& text, int dim, const std::string& where = "");

  const std::string& text() const { return text_; }
  bool uses_distance() const { return uses_d_; }
  double evaluate(const Point& x, double d = 0) const;

  // x -> evaluate(x, max(0, d_D(x))). The domain is copied.
  Function bind(const Domain& domain) const;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  bool uses_d_ = false;
};

}  // namespace nonlocal
