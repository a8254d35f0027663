#pragma once

// Minimal expression parser for branch maps and weight functions supplied as
// strings in config files. Grammar (polynomial/rational in x):
//
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | base ('^' integer)?
//   base   := number | 'x' | '(' expr ')'
//
// Derivatives are taken symbolically on the AST so Jacobians of custom
// models carry no numerical-differentiation error.

#include <cctype>
#include <cmath>
#include <memory>
#include <string>

#include "gapscope/common.hpp"

namespace gapscope::expr {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { constant, variable, add, sub, mul, div, pow } kind;
  double value = 0.0;  // constant
  int exponent = 1;    // pow
  NodePtr a, b;
};

inline NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::constant;
  n->value = v;
  return n;
}

inline NodePtr variable() {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::variable;
  return n;
}

inline NodePtr binary(Node::Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

inline NodePtr power(NodePtr a, int e) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::pow;
  n->a = std::move(a);
  n->exponent = e;
  return n;
}

inline double evaluate(const NodePtr& n, double x) {
  switch (n->kind) {
    case Node::Kind::constant: return n->value;
    case Node::Kind::variable: return x;
    case Node::Kind::add: return evaluate(n->a, x) + evaluate(n->b, x);
    case Node::Kind::sub: return evaluate(n->a, x) - evaluate(n->b, x);
    case Node::Kind::mul: return evaluate(n->a, x) * evaluate(n->b, x);
    case Node::Kind::div: return evaluate(n->a, x) / evaluate(n->b, x);
    case Node::Kind::pow: {
      double base = evaluate(n->a, x);
      return std::pow(base, n->exponent);
    }
  }
  return 0.0;
}

inline NodePtr derivative(const NodePtr& n) {
  switch (n->kind) {
    case Node::Kind::constant: return constant(0.0);
    case Node::Kind::variable: return constant(1.0);
    case Node::Kind::add: return binary(Node::Kind::add, derivative(n->a), derivative(n->b));
    case Node::Kind::sub: return binary(Node::Kind::sub, derivative(n->a), derivative(n->b));
    case Node::Kind::mul:
      return binary(Node::Kind::add, binary(Node::Kind::mul, derivative(n->a), n->b),
                    binary(Node::Kind::mul, n->a, derivative(n->b)));
    case Node::Kind::div:
      // (a/b)' = (a'b - ab') / b^2
      return binary(Node::Kind::div,
                    binary(Node::Kind::sub, binary(Node::Kind::mul, derivative(n->a), n->b),
                           binary(Node::Kind::mul, n->a, derivative(n->b))),
                    power(n->b, 2));
    case Node::Kind::pow:
      if (n->exponent == 0) return constant(0.0);
      return binary(Node::Kind::mul,
                    binary(Node::Kind::mul, constant(n->exponent), power(n->a, n->exponent - 1)),
                    derivative(n->a));
  }
  return constant(0.0);
}

class Parser {
 public:
  explicit Parser(std::string text) : text_(std::move(text)) {}

  NodePtr parse() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      fail("ExpressionInvalid", "trailing characters in expression: '" + text_.substr(pos_) + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr e = parse_term();
    for (;;) {
      if (eat('+'))
        e = binary(Node::Kind::add, e, parse_term());
      else if (eat('-'))
        e = binary(Node::Kind::sub, e, parse_term());
      else
        return e;
    }
  }

  NodePtr parse_term() {
    NodePtr e = parse_factor();
    for (;;) {
      if (eat('*'))
        e = binary(Node::Kind::mul, e, parse_factor());
      else if (eat('/'))
        e = binary(Node::Kind::div, e, parse_factor());
      else
        return e;
    }
  }

  NodePtr parse_factor() {
    if (eat('-')) return binary(Node::Kind::sub, constant(0.0), parse_factor());
    NodePtr base = parse_base();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == start) fail("ExpressionInvalid", "expected integer exponent after '^'");
      int e = std::stoi(text_.substr(start, pos_ - start));
      return power(base, neg ? -e : e);
    }
    return base;
  }

  NodePtr parse_base() {
    skip_ws();
    char c = peek();
    if (c == '(') {
      eat('(');
      NodePtr e = parse_expr();
      if (!eat(')')) fail("ExpressionInvalid", "missing ')'");
      return e;
    }
    if (c == 'x' || c == 'X') {
      ++pos_;
      return variable();
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    if (pos_ == start) fail("ExpressionInvalid", std::string("unexpected character '") + c + "'");
    return constant(std::stod(text_.substr(start, pos_ - start)));
  }

  std::string text_;
  std::size_t pos_ = 0;
};

/// Parses an expression string; throws Error("ExpressionInvalid", ...) on bad input.
inline NodePtr parse(const std::string& text) { return Parser(text).parse(); }

inline RealFn as_function(const NodePtr& n) {
  return [n](double x) { return evaluate(n, x); };
}

}  // namespace gapscope::expr
