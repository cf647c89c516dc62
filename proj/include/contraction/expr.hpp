#pragma once

// Immutable expression trees over x1..xn, t, u1..uk with symbolic
// differentiation. Parsing and printing round-trip structurally.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace contraction {

enum class Op {
  constant,
  state,  // x_i
  time,   // t
  input,  // u_j
  neg,
  add,
  sub,
  mul,
  div,
  pow,  // integer exponent
  tanh,
  sin,
  cos,
  exp,
  abs,
  sign,  // appears in derivatives of abs; sign(0) = 0
};

class Expr;

struct ExprNode {
  Op op;
  double value = 0.0;  // constant
  int index = 0;       // state/input index (0-based) or pow exponent
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
};

class Expr {
 public:
  Expr();  // constant 0
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  static Expr constant(double c);
  static Expr state(int i);
  static Expr time();
  static Expr input(int j);
  /// Raw node construction without simplification (used by the parser).
  static Expr make(Op op, const Expr& operand, int index = 0);
  static Expr make(Op op, const Expr& lhs, const Expr& rhs);

  Op op() const { return node_->op; }
  double value() const { return node_->value; }
  int index() const { return node_->index; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }
  const ExprNode* node() const { return node_.get(); }

  bool is_constant(double c) const { return op() == Op::constant && value() == c; }

 private:
  std::shared_ptr<const ExprNode> node_;
};

// Simplifying constructors: constant folding and the 0/1 identities.
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& a, int exponent);
Expr apply(Op function, const Expr& a);

struct EvalContext {
  double t = 0.0;
  std::span<const double> x;
  std::span<const double> u;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, int component = -1)
      : std::runtime_error(what), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

double evaluate(const Expr& e, const EvalContext& ctx);

enum class VariableKind { state, input };

/// Partial derivative with respect to x_i or u_j; d|v| = sign(v) dv.
Expr differentiate(const Expr& e, VariableKind kind, int index);

std::string to_string(const Expr& e);
bool structurally_equal(const Expr& a, const Expr& b);
bool depends_on_time(const Expr& e);
int max_state_index(const Expr& e);  // -1 when no state variable appears
int max_input_index(const Expr& e);

/// Arguments of every abs(...) subterm, i.e. the kink surfaces {arg = 0}.
std::vector<Expr> abs_arguments(const Expr& e);

/// Shift variable indices: x_i -> x_{i + state_offset}, u_j -> u_{j + input_offset}.
Expr remap_variables(const Expr& e, int state_offset, int input_offset);

/// Parse one expression over x1..x{n}, t, u1..u{k}. Unicode minus is accepted.
Expr parse_expression(std::string_view text, int n, int k);

/// Split a field source on ';' and newlines and parse each non-empty piece.
std::vector<Expr> parse_expression_list(std::string_view text, int n, int k);

}  // namespace contraction
