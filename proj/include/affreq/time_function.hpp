#pragma once

// Scalar functions of time built from a small closed algebra: constants, t,
// sums, products, sin/cos/exp of a sub-expression. Every function in the
// algebra can be evaluated, differentiated symbolically to any order and
// written to / parsed from an infix text form such as
//
//     12000 + 3000*sin(3.14159265358979*t)
//
// An opaque node wraps an arbitrary callback. It evaluates, but refuses
// differentiation and serialization.

#include "affreq/error.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

namespace affreq {

class TimeFunction {
public:
  enum class Kind { constant, time, sum, product, sin, cos, exp, opaque };

  TimeFunction() : TimeFunction(constant(0.0)) {}

  static TimeFunction constant(double c) {
    auto n = std::make_shared<Node>(Kind::constant);
    n->value = c;
    return TimeFunction(std::move(n));
  }
  static TimeFunction time() { return TimeFunction(std::make_shared<Node>(Kind::time)); }

  static TimeFunction sin(const TimeFunction& arg) { return unary(Kind::sin, arg); }
  static TimeFunction cos(const TimeFunction& arg) { return unary(Kind::cos, arg); }
  static TimeFunction exp(const TimeFunction& arg) { return unary(Kind::exp, arg); }

  static TimeFunction opaque(std::function<double(double)> fn, std::string label = "opaque") {
    auto n = std::make_shared<Node>(Kind::opaque);
    n->callback = std::move(fn);
    n->label = std::move(label);
    return TimeFunction(std::move(n));
  }

  // amplitude * sin(omega * t + phase)
  static TimeFunction sinusoid(double amplitude, double omega, double phase = 0.0) {
    return constant(amplitude) * sin(constant(omega) * time() + constant(phase));
  }

  static TimeFunction parse(std::string_view text);

  Kind kind() const { return node_->kind; }
  bool is_constant() const { return node_->kind == Kind::constant; }
  double constant_value() const { return node_->value; }

  // True when no opaque node occurs anywhere in the tree.
  bool is_symbolic() const { return symbolic(*node_); }

  double operator()(double t) const { return eval(*node_, t); }

  TimeFunction derivative() const { return TimeFunction(diff(node_)); }
  TimeFunction derivative(int order) const {
    TimeFunction f = *this;
    for (int i = 0; i < order; ++i) f = f.derivative();
    return f;
  }

  std::string to_string() const {
    std::string out;
    print(*node_, out, 0);
    return out;
  }

  friend TimeFunction operator+(const TimeFunction& a, const TimeFunction& b) {
    return TimeFunction(make_sum(a.node_, b.node_));
  }
  friend TimeFunction operator*(const TimeFunction& a, const TimeFunction& b) {
    return TimeFunction(make_product(a.node_, b.node_));
  }
  friend TimeFunction operator-(const TimeFunction& a) { return constant(-1.0) * a; }
  friend TimeFunction operator-(const TimeFunction& a, const TimeFunction& b) { return a + (-b); }
  friend TimeFunction operator*(double k, const TimeFunction& a) { return constant(k) * a; }
  friend TimeFunction operator+(const TimeFunction& a, double k) { return a + constant(k); }

private:
  struct Node {
    explicit Node(Kind k) : kind(k) {}
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::function<double(double)> callback;
    std::string label;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit TimeFunction(NodePtr n) : node_(std::move(n)) {}

  static TimeFunction unary(Kind k, const TimeFunction& arg) {
    if (arg.is_constant()) {
      const double c = arg.constant_value();
      switch (k) {
      case Kind::sin: return constant(std::sin(c));
      case Kind::cos: return constant(std::cos(c));
      case Kind::exp: return constant(std::exp(c));
      default: break;
      }
    }
    auto n = std::make_shared<Node>(k);
    n->lhs = arg.node_;
    return TimeFunction(std::move(n));
  }

  static bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::constant && n->value == v;
  }

  static NodePtr make_const(double v) { return constant(v).node_; }

  static NodePtr make_sum(const NodePtr& a, const NodePtr& b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (a->kind == Kind::constant && b->kind == Kind::constant) return make_const(a->value + b->value);
    auto n = std::make_shared<Node>(Kind::sum);
    n->lhs = a;
    n->rhs = b;
    return n;
  }

  static NodePtr make_product(const NodePtr& a, const NodePtr& b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (a->kind == Kind::constant && b->kind == Kind::constant) return make_const(a->value * b->value);
    // keep constants on the left and fold nested constant factors
    if (b->kind == Kind::constant) return make_product(b, a);
    if (a->kind == Kind::constant && b->kind == Kind::product && b->lhs->kind == Kind::constant)
      return make_product(make_const(a->value * b->lhs->value), b->rhs);
    auto n = std::make_shared<Node>(Kind::product);
    n->lhs = a;
    n->rhs = b;
    return n;
  }

  static bool symbolic(const Node& n) {
    if (n.kind == Kind::opaque) return false;
    if (n.lhs && !symbolic(*n.lhs)) return false;
    if (n.rhs && !symbolic(*n.rhs)) return false;
    return true;
  }

  static double eval(const Node& n, double t) {
    switch (n.kind) {
    case Kind::constant: return n.value;
    case Kind::time: return t;
    case Kind::sum: return eval(*n.lhs, t) + eval(*n.rhs, t);
    case Kind::product: return eval(*n.lhs, t) * eval(*n.rhs, t);
    case Kind::sin: return std::sin(eval(*n.lhs, t));
    case Kind::cos: return std::cos(eval(*n.lhs, t));
    case Kind::exp: return std::exp(eval(*n.lhs, t));
    case Kind::opaque: return n.callback(t);
    }
    return 0.0;
  }

  static NodePtr diff(const NodePtr& n) {
    switch (n->kind) {
    case Kind::constant: return make_const(0.0);
    case Kind::time: return make_const(1.0);
    case Kind::sum: return make_sum(diff(n->lhs), diff(n->rhs));
    case Kind::product:
      return make_sum(make_product(diff(n->lhs), n->rhs), make_product(n->lhs, diff(n->rhs)));
    case Kind::sin: return make_product(diff(n->lhs), unary(Kind::cos, TimeFunction(n->lhs)).node_);
    case Kind::cos:
      return make_product(make_product(make_const(-1.0), diff(n->lhs)),
                          unary(Kind::sin, TimeFunction(n->lhs)).node_);
    case Kind::exp: return make_product(diff(n->lhs), n);
    case Kind::opaque:
      throw UnsupportedSpecError("cannot differentiate opaque time function '" + n->label + "'");
    }
    return make_const(0.0);
  }

  static void print_number(double v, std::string& out) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw ValidationError("cannot format number");
    if (v < 0) out += '(';
    out.append(buf, end);
    if (v < 0) out += ')';
  }

  // precedence: 0 = sum context, 1 = product operand
  static void print(const Node& n, std::string& out, int prec) {
    switch (n.kind) {
    case Kind::constant: print_number(n.value, out); return;
    case Kind::time: out += 't'; return;
    case Kind::sum:
      if (prec > 0) out += '(';
      print(*n.lhs, out, 0);
      out += " + ";
      print(*n.rhs, out, 0);
      if (prec > 0) out += ')';
      return;
    case Kind::product:
      print(*n.lhs, out, 1);
      out += '*';
      print(*n.rhs, out, 1);
      return;
    case Kind::sin: out += "sin("; print(*n.lhs, out, 0); out += ')'; return;
    case Kind::cos: out += "cos("; print(*n.lhs, out, 0); out += ')'; return;
    case Kind::exp: out += "exp("; print(*n.lhs, out, 0); out += ')'; return;
    case Kind::opaque:
      throw UnsupportedSpecError("cannot serialize opaque time function '" + n.label + "'");
    }
  }

  NodePtr node_;

  friend class TimeFunctionParser;
};

// Recursive-descent parser for the infix form.
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | 't' | 'pi' | ('sin'|'cos'|'exp') '(' expr ')' | '(' expr ')'
// Division is only accepted by a constant.
class TimeFunctionParser {
public:
  explicit TimeFunctionParser(std::string_view text) : text_(text) {}

  TimeFunction parse() {
    TimeFunction f = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("time function '" + std::string(text_) + "': " + what + " at offset " +
                     std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  TimeFunction expr() {
    TimeFunction f = term();
    for (;;) {
      if (accept('+')) f = f + term();
      else if (accept('-')) f = f - term();
      else return f;
    }
  }

  TimeFunction term() {
    TimeFunction f = unary();
    for (;;) {
      if (accept('*')) {
        f = f * unary();
      } else if (accept('/')) {
        TimeFunction d = unary();
        if (!d.is_constant()) fail("division by a non-constant expression");
        if (d.constant_value() == 0.0) fail("division by zero");
        f = TimeFunction::constant(1.0 / d.constant_value()) * f;
      } else {
        return f;
      }
    }
  }

  TimeFunction unary() {
    if (accept('-')) return -unary();
    return primary();
  }

  TimeFunction primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      TimeFunction f = expr();
      if (!accept(')')) fail("expected ')'");
      return f;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
      if (ec != std::errc{}) fail("bad number");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      return TimeFunction::constant(v);
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word.empty()) fail("unexpected character");
    if (word == "t") return TimeFunction::time();
    if (word == "pi") return TimeFunction::constant(std::numbers::pi);
    if (word == "sin" || word == "cos" || word == "exp") {
      if (!accept('(')) fail("expected '(' after " + std::string(word));
      TimeFunction arg = expr();
      if (!accept(')')) fail("expected ')'");
      if (word == "sin") return TimeFunction::sin(arg);
      if (word == "cos") return TimeFunction::cos(arg);
      return TimeFunction::exp(arg);
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(word) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline TimeFunction TimeFunction::parse(std::string_view text) {
  return TimeFunctionParser(text).parse();
}

} // namespace affreq
