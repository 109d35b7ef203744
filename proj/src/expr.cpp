#include "nonlocal/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "nonlocal/error.hpp"

namespace nonlocal {

struct Expression::Node {
  enum Kind { Const, X, Y, D, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp } kind = Const;
  double value = 0;
  std::shared_ptr<const Node> a, b;

  double eval(const Point& p, double d) const {
    switch (kind) {
      case Const: return value;
      case X: return p(0);
      case Y: return p(1);
      case D: return d;
      case Neg: return -a->eval(p, d);
      case Add: return a->eval(p, d) + b->eval(p, d);
      case Sub: return a->eval(p, d) - b->eval(p, d);
      case Mul: return a->eval(p, d) * b->eval(p, d);
      case Div: return a->eval(p, d) / b->eval(p, d);
      case Pow: return std::pow(a->eval(p, d), b->eval(p, d));
      case Sin: return std::sin(a->eval(p, d));
      case Cos: return std::cos(a->eval(p, d));
      case Exp: return std::exp(a->eval(p, d));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  Parser(const std::string& s, int dim, const std::string& where)
      : s_(s), dim_(dim), where_(where) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return n;
  }
  bool uses_d = false;

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError(where_, "expression \"" + s_ + "\" column " + std::to_string(i_ + 1) + ": " + msg);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  static NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+')) n = make(Node::Add, n, term());
      else if (eat('-')) n = make(Node::Sub, n, term());
      else return n;
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*')) n = make(Node::Mul, n, unary());
      else if (eat('/')) n = make(Node::Div, n, unary());
      else return n;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Node::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Node::Pow, base, unary());
    return base;
  }
  NodePtr atom() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[i_];
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + i_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      i_ += std::size_t(end - begin);
      return make(Node::Const, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = i_;
      while (i_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i_]))) ++i_;
      const std::string id = s_.substr(start, i_ - start);
      if (id == "x") return make(Node::X);
      if (id == "y") {
        if (dim_ < 2) {
          i_ = start;
          fail("'y' needs a 2-d domain");
        }
        return make(Node::Y);
      }
      if (id == "d") {
        uses_d = true;
        return make(Node::D);
      }
      if (id == "pi") return make(Node::Const, nullptr, nullptr, 3.14159265358979323846);
      Node::Kind k;
      if (id == "sin") k = Node::Sin;
      else if (id == "cos") k = Node::Cos;
      else if (id == "exp") k = Node::Exp;
      else {
        i_ = start;
        fail("unknown name '" + id + "'");
      }
      if (!eat('(')) fail("expected '(' after " + id);
      NodePtr arg = expr();
      if (!eat(')')) fail("expected ')'");
      return make(k, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  int dim_;
  std::string where_;
  std::size_t i_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, int dim, const std::string& where) {
  Parser p(text, dim, where);
  Expression e;
  e.root_ = p.parse();
  e.text_ = text;
  e.uses_d_ = p.uses_d;
  return e;
}

double Expression::evaluate(const Point& x, double d) const {
  if (!root_) throw DomainError("empty expression");
  return root_->eval(x, d);
}

Function Expression::bind(const Domain& domain) const {
  auto root = root_;
  if (!root) throw DomainError("empty expression");
  if (!uses_d_) return [root](const Point& x) { return root->eval(x, 0); };
  return [root, domain](const Point& x) { return root->eval(x, std::max(0.0, domain.sdist(x))); };
}

}  // namespace nonlocal
