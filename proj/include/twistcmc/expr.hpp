#pragma once

// Small arithmetic expression language with exact symbolic differentiation.
//
// Grammar (lowest to highest precedence):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' exponent)?        right-associative
//   primary := number | variable | func '(' sum ')' | '(' sum ')'
// The exponent of '^' must be a constant (no variables); it is folded at parse time.

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twistcmc/errors.hpp"

namespace twistcmc::expr {

enum class Func { sin, cos, exp, log, sqrt };

inline constexpr std::array<std::pair<std::string_view, Func>, 5> kFunctions{{
    {"sin", Func::sin},
    {"cos", Func::cos},
    {"exp", Func::exp},
    {"log", Func::log},
    {"sqrt", Func::sqrt},
}};

inline std::string_view func_name(Func f) {
  for (const auto& [name, id] : kFunctions) {
    if (id == f) return name;
  }
  return "?";
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { number, variable, negate, add, sub, mul, div, pow, call };

  Kind kind = Kind::number;
  double value = 0.0;     // literal for `number`, exponent for `pow`
  std::size_t var = 0;    // index into the declared variable list
  Func func = Func::sin;  // for `call`
  NodePtr lhs;            // operand of unary nodes, base of `pow`
  NodePtr rhs;
};

namespace detail {

inline NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::number;
  n->value = v;
  return n;
}

inline NodePtr variable(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::variable;
  n->var = index;
  return n;
}

inline NodePtr unary(Node::Kind kind, NodePtr operand) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(operand);
  return n;
}

inline NodePtr binary(Node::Kind kind, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

inline NodePtr power(NodePtr base, double exponent) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::pow;
  n->lhs = std::move(base);
  n->value = exponent;
  return n;
}

inline NodePtr call(Func f, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

// Fully parenthesised so that parse(print(e)) reproduces e exactly.
inline void print(const Node& n, std::span<const std::string> vars, std::string& out) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::number:
      if (std::signbit(n.value)) {
        out += "(" + format_number(n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      return;
    case K::variable:
      out += vars[n.var];
      return;
    case K::negate:
      out += "(-";
      print(*n.lhs, vars, out);
      out += ")";
      return;
    case K::pow:
      out += "(";
      print(*n.lhs, vars, out);
      out += "^(" + format_number(n.value) + "))";
      return;
    case K::call:
      out += std::string(func_name(n.func)) + "(";
      print(*n.lhs, vars, out);
      out += ")";
      return;
    default: {
      const char op = n.kind == K::add ? '+' : n.kind == K::sub ? '-' : n.kind == K::mul ? '*' : '/';
      out += "(";
      print(*n.lhs, vars, out);
      out += op;
      print(*n.rhs, vars, out);
      out += ")";
      return;
    }
  }
}

inline bool has_variables(const Node& n) {
  if (n.kind == Node::Kind::variable) return true;
  if (n.lhs && has_variables(*n.lhs)) return true;
  if (n.rhs && has_variables(*n.rhs)) return true;
  return false;
}

inline double eval(const Node& n, std::span<const double> x, std::span<const std::string> vars);

[[noreturn]] inline void domain_error(const Node& n, std::span<const std::string> vars,
                                      const std::string& what) {
  std::string text;
  print(n, vars, text);
  throw DomainError(what + " in subexpression " + text);
}

inline double eval(const Node& n, std::span<const double> x, std::span<const std::string> vars) {
  using K = Node::Kind;
  switch (n.kind) {
    case K::number:
      return n.value;
    case K::variable:
      return x[n.var];
    case K::negate:
      return -eval(*n.lhs, x, vars);
    case K::add:
      return eval(*n.lhs, x, vars) + eval(*n.rhs, x, vars);
    case K::sub:
      return eval(*n.lhs, x, vars) - eval(*n.rhs, x, vars);
    case K::mul:
      return eval(*n.lhs, x, vars) * eval(*n.rhs, x, vars);
    case K::div: {
      const double num = eval(*n.lhs, x, vars);
      const double den = eval(*n.rhs, x, vars);
      if (den == 0.0) domain_error(n, vars, "division by zero");
      return num / den;
    }
    case K::pow: {
      const double base = eval(*n.lhs, x, vars);
      if (base < 0.0 && std::trunc(n.value) != n.value) {
        domain_error(n, vars, "negative base with non-integer exponent");
      }
      if (base == 0.0 && n.value < 0.0) domain_error(n, vars, "zero base with negative exponent");
      return std::pow(base, n.value);
    }
    case K::call: {
      const double a = eval(*n.lhs, x, vars);
      switch (n.func) {
        case Func::sin:
          return std::sin(a);
        case Func::cos:
          return std::cos(a);
        case Func::exp:
          return std::exp(a);
        case Func::log:
          if (a <= 0.0) domain_error(n, vars, "log of non-positive value");
          return std::log(a);
        case Func::sqrt:
          if (a < 0.0) domain_error(n, vars, "sqrt of negative value");
          return std::sqrt(a);
      }
    }
  }
  return 0.0;
}

inline NodePtr derive(const NodePtr& n, std::size_t v) {
  using K = Node::Kind;
  switch (n->kind) {
    case K::number:
      return number(0.0);
    case K::variable:
      return number(n->var == v ? 1.0 : 0.0);
    case K::negate:
      return unary(K::negate, derive(n->lhs, v));
    case K::add:
    case K::sub:
      return binary(n->kind, derive(n->lhs, v), derive(n->rhs, v));
    case K::mul:
      return binary(K::add, binary(K::mul, derive(n->lhs, v), n->rhs),
                    binary(K::mul, n->lhs, derive(n->rhs, v)));
    case K::div: {
      auto num = binary(K::sub, binary(K::mul, derive(n->lhs, v), n->rhs),
                        binary(K::mul, n->lhs, derive(n->rhs, v)));
      return binary(K::div, num, binary(K::mul, n->rhs, n->rhs));
    }
    case K::pow: {
      if (n->value == 0.0) return number(0.0);
      if (n->value == 1.0) return derive(n->lhs, v);
      auto outer = binary(K::mul, number(n->value), power(n->lhs, n->value - 1.0));
      return binary(K::mul, outer, derive(n->lhs, v));
    }
    case K::call: {
      const NodePtr& u = n->lhs;
      auto du = derive(u, v);
      switch (n->func) {
        case Func::sin:
          return binary(K::mul, call(Func::cos, u), du);
        case Func::cos:
          return binary(K::mul, unary(K::negate, call(Func::sin, u)), du);
        case Func::exp:
          return binary(K::mul, n, du);
        case Func::log:
          return binary(K::div, du, u);
        case Func::sqrt:
          return binary(K::div, du, binary(K::mul, number(2.0), n));
      }
    }
  }
  return number(0.0);
}

}  // namespace detail

/// Immutable expression over a declared, ordered list of variables.
class Expr {
 public:
  Expr(NodePtr root, std::vector<std::string> variables)
      : root_(std::move(root)), vars_(std::make_shared<const std::vector<std::string>>(std::move(variables))) {}

  [[nodiscard]] const Node& root() const { return *root_; }
  [[nodiscard]] const std::vector<std::string>& variables() const { return *vars_; }

  /// Values are positional, matching `variables()`.
  [[nodiscard]] double operator()(std::span<const double> values) const {
    if (values.size() < vars_->size()) throw Error("expr: too few variable values supplied");
    return detail::eval(*root_, values, *vars_);
  }
  [[nodiscard]] double operator()(std::initializer_list<double> values) const {
    return (*this)(std::span<const double>(values.begin(), values.size()));
  }

  [[nodiscard]] std::string to_string() const {
    std::string out;
    detail::print(*root_, *vars_, out);
    return out;
  }

  [[nodiscard]] bool is_constant() const { return !detail::has_variables(*root_); }

  [[nodiscard]] std::size_t variable_index(std::string_view name) const {
    const auto it = std::find(vars_->begin(), vars_->end(), name);
    if (it == vars_->end()) throw Error("expr: undeclared variable '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - vars_->begin());
  }

  [[nodiscard]] Expr derivative(std::string_view name) const {
    return Expr(detail::derive(root_, variable_index(name)), vars_);
  }

 private:
  Expr(NodePtr root, std::shared_ptr<const std::vector<std::string>> vars)
      : root_(std::move(root)), vars_(std::move(vars)) {}

  NodePtr root_;
  std::shared_ptr<const std::vector<std::string>> vars_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_space();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    auto n = sum();
    skip_space();
    if (pos_ != src_.size()) throw ParseError("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
    return n;
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ == src_.size()) {
        throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
      }
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  NodePtr sum() {
    auto n = product();
    for (;;) {
      if (accept('+')) {
        n = binary(Node::Kind::add, n, product());
      } else if (accept('-')) {
        n = binary(Node::Kind::sub, n, product());
      } else {
        return n;
      }
    }
  }

  NodePtr product() {
    auto n = signed_term();
    for (;;) {
      if (accept('*')) {
        n = binary(Node::Kind::mul, n, signed_term());
      } else if (accept('/')) {
        n = binary(Node::Kind::div, n, signed_term());
      } else {
        return n;
      }
    }
  }

  NodePtr signed_term() {
    if (accept('-')) return unary(Node::Kind::negate, signed_term());
    if (accept('+')) return signed_term();
    return power_term();
  }

  NodePtr power_term() {
    auto base = primary();
    skip_space();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t at = pos_;
    auto exponent = exponent_term();
    if (has_variables(*exponent)) throw ParseError("exponent must be numeric", at);
    double value = 0.0;
    try {
      value = eval(*exponent, {}, vars_);
    } catch (const DomainError& e) {
      throw ParseError(std::string("invalid exponent: ") + e.what(), at);
    }
    return power(std::move(base), value);
  }

  // Right operand of '^': allows a leading sign and chains right-associatively.
  NodePtr exponent_term() {
    if (accept('-')) return unary(Node::Kind::negate, exponent_term());
    if (accept('+')) return exponent_term();
    return power_term();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ == src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto n = sum();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return literal();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  NodePtr literal() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
        pos_ = p;
      }
    }
    double v = 0.0;
    const char* first = src_.data() + start;
    const char* last = src_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ParseError("malformed number", start);
    return number(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    for (const auto& [fname, id] : kFunctions) {
      if (fname != name) continue;
      skip_space();
      if (pos_ == src_.size() || src_[pos_] != '(') {
        throw ParseError("function '" + std::string(name) + "' requires an argument list", pos_);
      }
      ++pos_;
      std::vector<NodePtr> args;
      skip_space();
      if (!accept(')')) {
        args.push_back(sum());
        while (accept(',')) args.push_back(sum());
        expect(')');
      }
      if (args.size() != 1) {
        throw ParseError("function '" + std::string(name) + "' takes 1 argument, got " +
                             std::to_string(args.size()),
                         start);
      }
      return call(id, args.front());
    }

    const auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end()) throw ParseError("unknown identifier '" + std::string(name) + "'", start);
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      throw ParseError("'" + std::string(name) + "' is a variable, not a function", pos_);
    }
    return variable(static_cast<std::size_t>(it - vars_.begin()));
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view source, std::vector<std::string> variables) {
  auto root = detail::Parser(source, variables).parse();
  return Expr(std::move(root), std::move(variables));
}

inline double eval(const Expr& e, const std::map<std::string, double, std::less<>>& bindings) {
  std::vector<double> values;
  values.reserve(e.variables().size());
  for (const auto& name : e.variables()) {
    const auto it = bindings.find(name);
    if (it == bindings.end()) throw Error("expr: no binding for variable '" + name + "'");
    values.push_back(it->second);
  }
  return e(values);
}

inline Expr differentiate(const Expr& e, std::string_view var) { return e.derivative(var); }

}  // namespace twistcmc::expr
