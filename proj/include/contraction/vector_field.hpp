#pragma once

// Time-varying vector fields f(t, x[, u]) with exact symbolic Jacobians.

#include "contraction/expr.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace contraction {

class VectorFieldModel {
 public:
  /// `factor` (optional, n*n row-major) is A(t, x) with f(t, x) = A(t, x)(x - x*).
  VectorFieldModel(std::string name, int state_dim, int input_dim, std::vector<Expr> components,
                   std::optional<Eigen::VectorXd> equilibrium = std::nullopt,
                   std::optional<std::vector<Expr>> factor = std::nullopt);

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return k_; }
  const std::vector<Expr>& components() const { return components_; }
  const Expr& jacobian_entry(int i, int j) const { return jacobian_[static_cast<std::size_t>(i * n_ + j)]; }
  const Expr& input_jacobian_entry(int i, int j) const {
    return input_jacobian_[static_cast<std::size_t>(i * k_ + j)];
  }
  const std::optional<Eigen::VectorXd>& equilibrium() const { return equilibrium_; }
  bool has_factorization() const { return factor_.has_value(); }
  bool time_varying() const { return time_varying_; }

  /// f(t, x, u). An empty u means the zero input.
  Eigen::VectorXd eval(double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u = Eigen::VectorXd()) const;
  Eigen::MatrixXd eval_jacobian(double t, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u = Eigen::VectorXd()) const;
  Eigen::MatrixXd eval_input_jacobian(double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u = Eigen::VectorXd()) const;
  /// A(t, x) of the factorization f = A(t, x)(x - x*).
  Eigen::MatrixXd eval_factor(double t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u = Eigen::VectorXd()) const;

  /// Components as parseable text, one per line.
  std::string to_source() const;

  /// abs(...) arguments per component; their zero sets are where Df is discontinuous.
  std::vector<std::string> kink_surfaces() const;

 private:
  EvalContext context(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::MatrixXd eval_matrix(const std::vector<Expr>& entries, int rows, int cols,
                              const EvalContext& ctx) const;

  std::string name_;
  int n_;
  int k_;
  std::vector<Expr> components_;
  std::vector<Expr> jacobian_;        // n*n row-major
  std::vector<Expr> input_jacobian_;  // n*k row-major
  std::optional<Eigen::VectorXd> equilibrium_;
  std::optional<std::vector<Expr>> factor_;
  bool time_varying_ = false;
};

/// Parse "expr; expr; ..." (or newline-separated) over x1..xn, t, u1..uk.
VectorFieldModel parse_vector_field(std::string_view source, int n, int k,
                                    std::string name = "expression");

/// Largest relative discrepancy between the symbolic Jacobian and central finite
/// differences at (t, x): max |J - J_fd| / max(1, max |J|).
double jacobian_fd_error(const VectorFieldModel& model, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u = Eigen::VectorXd());

namespace builtin {

/// x' = A x, factored as A(x) = A about x* = 0.
VectorFieldModel linear(const Eigen::MatrixXd& A);

/// x' = [-x2^2 - 1, 0; 0, x1^2 - 1] x with x* = 0.
VectorFieldModel counterexample();

/// x' = -diag(a) x + T tanh(x) + bias, a > 0.
VectorFieldModel hopfield(const Eigen::VectorXd& a, const Eigen::MatrixXd& T,
                          const Eigen::VectorXd& bias);

/// x' = -c x + ell u (scalar, one input).
VectorFieldModel scalar_iss(double c, double ell);

}  // namespace builtin

}  // namespace contraction
