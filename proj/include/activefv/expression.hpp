#pragma once

// Small arithmetic expression language for custom initial data f0(x, y, theta).
//
//   expr    := compare
//   compare := sum (('<' | '<=' | '>' | '>=') sum)?      -> 1 or 0
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Names: x, y, theta, pi. Functions: sin cos tan exp log sqrt abs min max.

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "activefv/errors.hpp"
#include "activefv/grid.hpp"

namespace activefv {

class Expression {
 public:
  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    Expression e;
    e.root_ = p.parse_compare();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    e.text_ = text;
    return e;
  }

  double operator()(double x, double y, double theta) const {
    return eval(*root_, x, y, theta);
  }

  const std::string& text() const noexcept { return text_; }

 private:
  enum class Op {
    number, var_x, var_y, var_theta,
    add, sub, mul, div, pow, neg,
    lt, le, gt, ge,
    call
  };

  struct Node {
    Op op = Op::number;
    double value = 0.0;
    std::string fn;
    std::vector<std::shared_ptr<const Node>> args;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Op op, std::vector<NodePtr> args = {}, double v = 0.0,
                      std::string fn = {}) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    n->value = v;
    n->fn = std::move(fn);
    return n;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ParseError("expression '" + s + "': " + msg + " at column " +
                           std::to_string(pos + 1),
                       0);
    }
    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(const char* tok) {
      skip_ws();
      const std::string t(tok);
      if (s.compare(pos, t.size(), t) == 0) {
        pos += t.size();
        return true;
      }
      return false;
    }

    NodePtr parse_compare() {
      NodePtr lhs = parse_sum();
      if (eat("<=")) return make(Op::le, {lhs, parse_sum()});
      if (eat(">=")) return make(Op::ge, {lhs, parse_sum()});
      if (eat("<")) return make(Op::lt, {lhs, parse_sum()});
      if (eat(">")) return make(Op::gt, {lhs, parse_sum()});
      return lhs;
    }
    NodePtr parse_sum() {
      NodePtr lhs = parse_product();
      for (;;) {
        if (eat("+")) lhs = make(Op::add, {lhs, parse_product()});
        else if (eat("-")) lhs = make(Op::sub, {lhs, parse_product()});
        else return lhs;
      }
    }
    NodePtr parse_product() {
      NodePtr lhs = parse_unary();
      for (;;) {
        if (eat("*")) lhs = make(Op::mul, {lhs, parse_unary()});
        else if (eat("/")) lhs = make(Op::div, {lhs, parse_unary()});
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (eat("-")) return make(Op::neg, {parse_unary()});
      if (eat("+")) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      NodePtr base = parse_primary();
      if (eat("^")) return make(Op::pow, {base, parse_unary()});
      return base;
    }
    NodePtr parse_primary() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      if (eat("(")) {
        NodePtr e = parse_compare();
        if (!eat(")")) fail("expected ')'");
        return e;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        return make(Op::number, {}, v);
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
          ++pos;
        const std::string name = s.substr(start, pos - start);
        if (eat("(")) {
          std::vector<NodePtr> args{parse_compare()};
          while (eat(",")) args.push_back(parse_compare());
          if (!eat(")")) fail("expected ')' after arguments");
          check_function(name, args.size());
          return make(Op::call, std::move(args), 0.0, name);
        }
        if (name == "x") return make(Op::var_x);
        if (name == "y") return make(Op::var_y);
        if (name == "theta") return make(Op::var_theta);
        if (name == "pi") return make(Op::number, {}, kPi);
        pos = start;
        fail("unknown name '" + name + "'");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
    void check_function(const std::string& name, std::size_t nargs) {
      static const char* unary[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "abs"};
      for (const char* u : unary)
        if (name == u) {
          if (nargs != 1) fail(name + " takes one argument");
          return;
        }
      if (name == "min" || name == "max") {
        if (nargs != 2) fail(name + " takes two arguments");
        return;
      }
      fail("unknown function '" + name + "'");
    }
  };

  static double eval(const Node& n, double x, double y, double th) {
    auto a = [&](std::size_t m) { return eval(*n.args[m], x, y, th); };
    switch (n.op) {
      case Op::number: return n.value;
      case Op::var_x: return x;
      case Op::var_y: return y;
      case Op::var_theta: return th;
      case Op::add: return a(0) + a(1);
      case Op::sub: return a(0) - a(1);
      case Op::mul: return a(0) * a(1);
      case Op::div: return a(0) / a(1);
      case Op::pow: return std::pow(a(0), a(1));
      case Op::neg: return -a(0);
      case Op::lt: return a(0) < a(1) ? 1.0 : 0.0;
      case Op::le: return a(0) <= a(1) ? 1.0 : 0.0;
      case Op::gt: return a(0) > a(1) ? 1.0 : 0.0;
      case Op::ge: return a(0) >= a(1) ? 1.0 : 0.0;
      case Op::call: {
        const std::string& f = n.fn;
        if (f == "min") return std::min(a(0), a(1));
        if (f == "max") return std::max(a(0), a(1));
        const double v = a(0);
        if (f == "sin") return std::sin(v);
        if (f == "cos") return std::cos(v);
        if (f == "tan") return std::tan(v);
        if (f == "exp") return std::exp(v);
        if (f == "log") return std::log(v);
        if (f == "sqrt") return std::sqrt(v);
        return std::abs(v);
      }
    }
    return 0.0;
  }

  NodePtr root_;
  std::string text_;
};

}  // namespace activefv
