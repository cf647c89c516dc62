#include "contraction/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

namespace contraction {

namespace {

std::shared_ptr<const ExprNode> make_node(Op op, double value = 0.0, int index = 0,
                                     std::shared_ptr<const ExprNode> lhs = nullptr,
                                     std::shared_ptr<const ExprNode> rhs = nullptr) {
  return std::make_shared<const ExprNode>(ExprNode{op, value, index, std::move(lhs), std::move(rhs)});
}

bool is_function(Op op) {
  return op == Op::tanh || op == Op::sin || op == Op::cos || op == Op::exp || op == Op::abs ||
         op == Op::sign;
}

const char* function_name(Op op) {
  switch (op) {
    case Op::tanh: return "tanh";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::abs: return "abs";
    case Op::sign: return "sign";
    default: return "?";
  }
}

double apply_function(Op op, double v) {
  switch (op) {
    case Op::tanh: return std::tanh(v);
    case Op::sin: return std::sin(v);
    case Op::cos: return std::cos(v);
    case Op::exp: return std::exp(v);
    case Op::abs: return std::abs(v);
    case Op::sign: return static_cast<double>((0.0 < v) - (v < 0.0));
    default: throw std::logic_error("not a function node");
  }
}

double int_pow(double base, int exponent) {
  if (exponent < 0) {
    if (base == 0.0) throw EvalError("zero raised to a negative power");
    return 1.0 / int_pow(base, -exponent);
  }
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace

Expr::Expr() : node_(make_node(Op::constant, 0.0)) {}

Expr Expr::constant(double c) { return Expr(make_node(Op::constant, c)); }
Expr Expr::state(int i) { return Expr(make_node(Op::state, 0.0, i)); }
Expr Expr::time() { return Expr(make_node(Op::time)); }
Expr Expr::input(int j) { return Expr(make_node(Op::input, 0.0, j)); }

Expr Expr::make(Op op, const Expr& operand, int index) {
  return Expr(make_node(op, 0.0, index, operand.node_));
}

Expr Expr::make(Op op, const Expr& lhs, const Expr& rhs) {
  return Expr(make_node(op, 0.0, 0, lhs.node_, rhs.node_));
}

Expr operator-(const Expr& a) {
  if (a.op() == Op::constant) return Expr::constant(-a.value());
  if (a.op() == Op::neg) return a.lhs();
  return Expr::make(Op::neg, a);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.op() == Op::constant && b.op() == Op::constant) return Expr::constant(a.value() + b.value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  if (b.op() == Op::neg) return a - b.lhs();
  return Expr::make(Op::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.op() == Op::constant && b.op() == Op::constant) return Expr::constant(a.value() - b.value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  if (b.op() == Op::neg) return a + b.lhs();
  return Expr::make(Op::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.op() == Op::constant && b.op() == Op::constant) return Expr::constant(a.value() * b.value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  if (a.op() == Op::neg) return -(a.lhs() * b);
  if (b.op() == Op::neg) return -(a * b.lhs());
  return Expr::make(Op::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr::constant(0.0);
  if (b.is_constant(1.0)) return a;
  if (a.op() == Op::constant && b.op() == Op::constant && b.value() != 0.0) {
    return Expr::constant(a.value() / b.value());
  }
  return Expr::make(Op::div, a, b);
}

Expr pow(const Expr& a, int exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return a;
  if (a.op() == Op::constant && (a.value() != 0.0 || exponent > 0)) {
    return Expr::constant(int_pow(a.value(), exponent));
  }
  return Expr::make(Op::pow, a, exponent);
}

Expr apply(Op function, const Expr& a) {
  if (!is_function(function)) throw std::invalid_argument("apply: not a function op");
  if (a.op() == Op::constant) return Expr::constant(apply_function(function, a.value()));
  return Expr::make(function, a);
}

double evaluate(const Expr& e, const EvalContext& ctx) {
  switch (e.op()) {
    case Op::constant: return e.value();
    case Op::state: return ctx.x[static_cast<std::size_t>(e.index())];
    case Op::time: return ctx.t;
    case Op::input:
      return ctx.u.empty() ? 0.0 : ctx.u[static_cast<std::size_t>(e.index())];
    case Op::neg: return -evaluate(e.lhs(), ctx);
    case Op::add: return evaluate(e.lhs(), ctx) + evaluate(e.rhs(), ctx);
    case Op::sub: return evaluate(e.lhs(), ctx) - evaluate(e.rhs(), ctx);
    case Op::mul: return evaluate(e.lhs(), ctx) * evaluate(e.rhs(), ctx);
    case Op::div: {
      const double den = evaluate(e.rhs(), ctx);
      if (den == 0.0) throw EvalError("division by zero");
      return evaluate(e.lhs(), ctx) / den;
    }
    case Op::pow: return int_pow(evaluate(e.lhs(), ctx), e.index());
    default: return apply_function(e.op(), evaluate(e.lhs(), ctx));
  }
}

Expr differentiate(const Expr& e, VariableKind kind, int index) {
  const auto d = [&](const Expr& sub) { return differentiate(sub, kind, index); };
  switch (e.op()) {
    case Op::constant:
    case Op::time: return Expr::constant(0.0);
    case Op::state:
      return Expr::constant(kind == VariableKind::state && e.index() == index ? 1.0 : 0.0);
    case Op::input:
      return Expr::constant(kind == VariableKind::input && e.index() == index ? 1.0 : 0.0);
    case Op::neg: return -d(e.lhs());
    case Op::add: return d(e.lhs()) + d(e.rhs());
    case Op::sub: return d(e.lhs()) - d(e.rhs());
    case Op::mul: return d(e.lhs()) * e.rhs() + e.lhs() * d(e.rhs());
    case Op::div: {
      const Expr num = d(e.lhs()) * e.rhs() - e.lhs() * d(e.rhs());
      return num / pow(e.rhs(), 2);
    }
    case Op::pow:
      return Expr::constant(e.index()) * pow(e.lhs(), e.index() - 1) * d(e.lhs());
    case Op::tanh: {
      const Expr inner = d(e.lhs());
      if (inner.is_constant(0.0)) return inner;
      return (Expr::constant(1.0) - pow(e, 2)) * inner;
    }
    case Op::sin: return apply(Op::cos, e.lhs()) * d(e.lhs());
    case Op::cos: return -(apply(Op::sin, e.lhs()) * d(e.lhs()));
    case Op::exp: return e * d(e.lhs());
    case Op::abs: return apply(Op::sign, e.lhs()) * d(e.lhs());
    case Op::sign: return Expr::constant(0.0);
  }
  return Expr::constant(0.0);
}

namespace {

// Binding strength used for parenthesization; higher binds tighter.
int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::add:
    case Op::sub: return 1;
    case Op::mul:
    case Op::div: return 2;
    case Op::neg: return 3;
    case Op::constant: return e.value() < 0.0 || std::signbit(e.value()) ? 3 : 5;
    case Op::pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, int min_prec, std::string& out) {
  if (precedence(e) < min_prec) {
    out += '(';
    print(e, out);
    out += ')';
  } else {
    print(e, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::constant: out += format_number(e.value()); return;
    case Op::state: out += "x" + std::to_string(e.index() + 1); return;
    case Op::time: out += "t"; return;
    case Op::input: out += "u" + std::to_string(e.index() + 1); return;
    case Op::neg:
      out += '-';
      print_wrapped(e.lhs(), 3, out);
      return;
    case Op::add:
    case Op::sub:
      print_wrapped(e.lhs(), 1, out);
      out += e.op() == Op::add ? " + " : " - ";
      print_wrapped(e.rhs(), 2, out);
      return;
    case Op::mul:
    case Op::div:
      print_wrapped(e.lhs(), 2, out);
      out += e.op() == Op::mul ? "*" : "/";
      print_wrapped(e.rhs(), 3, out);
      return;
    case Op::pow:
      print_wrapped(e.lhs(), 5, out);
      out += "^" + std::to_string(e.index());
      return;
    default:
      out += function_name(e.op());
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
  }
}

template <typename Visit>
void walk(const Expr& e, Visit&& visit) {
  visit(e);
  if (e.node()->lhs) walk(e.lhs(), visit);
  if (e.node()->rhs) walk(e.rhs(), visit);
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::constant: return a.value() == b.value();
    case Op::state:
    case Op::input: return a.index() == b.index();
    case Op::time: return true;
    default: break;
  }
  if (a.op() == Op::pow && a.index() != b.index()) return false;
  if (!structurally_equal(a.lhs(), b.lhs())) return false;
  if (a.node()->rhs || b.node()->rhs) {
    if (!a.node()->rhs || !b.node()->rhs) return false;
    return structurally_equal(a.rhs(), b.rhs());
  }
  return true;
}

bool depends_on_time(const Expr& e) {
  bool found = false;
  walk(e, [&](const Expr& s) { found = found || s.op() == Op::time; });
  return found;
}

int max_state_index(const Expr& e) {
  int m = -1;
  walk(e, [&](const Expr& s) {
    if (s.op() == Op::state) m = std::max(m, s.index());
  });
  return m;
}

int max_input_index(const Expr& e) {
  int m = -1;
  walk(e, [&](const Expr& s) {
    if (s.op() == Op::input) m = std::max(m, s.index());
  });
  return m;
}

std::vector<Expr> abs_arguments(const Expr& e) {
  std::vector<Expr> out;
  walk(e, [&](const Expr& s) {
    if (s.op() == Op::abs) out.push_back(s.lhs());
  });
  return out;
}

Expr remap_variables(const Expr& e, int state_offset, int input_offset) {
  switch (e.op()) {
    case Op::state: return Expr::state(e.index() + state_offset);
    case Op::input: return Expr::input(e.index() + input_offset);
    case Op::constant:
    case Op::time: return e;
    default: break;
  }
  const Expr lhs = remap_variables(e.lhs(), state_offset, input_offset);
  if (!e.node()->rhs) return Expr::make(e.op(), lhs, e.index());
  return Expr::make(e.op(), lhs, remap_variables(e.rhs(), state_offset, input_offset));
}

}  // namespace contraction
