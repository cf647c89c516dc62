#include "contraction/vector_field.hpp"

#include "contraction/norm.hpp"

#include <cmath>
#include <sstream>

namespace contraction {

VectorFieldModel::VectorFieldModel(std::string name, int state_dim, int input_dim,
                                   std::vector<Expr> components,
                                   std::optional<Eigen::VectorXd> equilibrium,
                                   std::optional<std::vector<Expr>> factor)
    : name_(std::move(name)),
      n_(state_dim),
      k_(input_dim),
      components_(std::move(components)),
      equilibrium_(std::move(equilibrium)),
      factor_(std::move(factor)) {
  if (n_ <= 0 || k_ < 0) throw std::invalid_argument("vector field dimensions must be positive");
  require_dim(static_cast<Index>(components_.size()), n_, "vector field components");
  for (const Expr& c : components_) {
    if (max_state_index(c) >= n_ || max_input_index(c) >= k_) {
      throw std::invalid_argument("vector field references a variable beyond its dimensions");
    }
    time_varying_ = time_varying_ || depends_on_time(c);
  }
  jacobian_.reserve(static_cast<std::size_t>(n_ * n_));
  input_jacobian_.reserve(static_cast<std::size_t>(n_ * k_));
  for (const Expr& c : components_) {
    for (int j = 0; j < n_; ++j) jacobian_.push_back(differentiate(c, VariableKind::state, j));
    for (int j = 0; j < k_; ++j) input_jacobian_.push_back(differentiate(c, VariableKind::input, j));
  }
  if (equilibrium_) {
    require_dim(equilibrium_->size(), n_, "declared equilibrium");
    for (double t : {0.0, 0.5, 1.0}) {
      const double residual = eval(t, *equilibrium_).norm();
      if (!(residual <= 1e-8)) {
        throw std::invalid_argument("declared equilibrium of '" + name_ +
                                    "' has residual " + std::to_string(residual));
      }
    }
  }
  if (factor_) require_dim(static_cast<Index>(factor_->size()), n_ * n_, "factor matrix entries");
}

EvalContext VectorFieldModel::context(double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) const {
  require_dim(x.size(), n_, "state");
  if (u.size() != 0) require_dim(u.size(), k_, "input");
  return EvalContext{t, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                     std::span<const double>(u.data(), static_cast<std::size_t>(u.size()))};
}

Eigen::VectorXd VectorFieldModel::eval(double t, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& u) const {
  const EvalContext ctx = context(t, x, u);
  Eigen::VectorXd out(n_);
  for (int i = 0; i < n_; ++i) {
    try {
      out(i) = evaluate(components_[static_cast<std::size_t>(i)], ctx);
    } catch (const EvalError& e) {
      throw EvalError(std::string(e.what()) + " in component " + std::to_string(i + 1), i);
    }
  }
  return out;
}

Eigen::MatrixXd VectorFieldModel::eval_matrix(const std::vector<Expr>& entries, int rows, int cols,
                                              const EvalContext& ctx) const {
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      try {
        out(i, j) = evaluate(entries[static_cast<std::size_t>(i * cols + j)], ctx);
      } catch (const EvalError& e) {
        throw EvalError(std::string(e.what()) + " in component " + std::to_string(i + 1), i);
      }
    }
  }
  return out;
}

Eigen::MatrixXd VectorFieldModel::eval_jacobian(double t, const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& u) const {
  return eval_matrix(jacobian_, n_, n_, context(t, x, u));
}

Eigen::MatrixXd VectorFieldModel::eval_input_jacobian(double t, const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u) const {
  return eval_matrix(input_jacobian_, n_, k_, context(t, x, u));
}

Eigen::MatrixXd VectorFieldModel::eval_factor(double t, const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& u) const {
  if (!factor_) throw std::logic_error("model '" + name_ + "' has no factorization");
  return eval_matrix(*factor_, n_, n_, context(t, x, u));
}

std::string VectorFieldModel::to_source() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) os << '\n';
    os << to_string(components_[i]);
  }
  return os.str();
}

std::vector<std::string> VectorFieldModel::kink_surfaces() const {
  std::vector<std::string> out;
  for (const Expr& c : components_) {
    for (const Expr& arg : abs_arguments(c)) out.push_back(to_string(arg) + " = 0");
  }
  return out;
}

VectorFieldModel parse_vector_field(std::string_view source, int n, int k, std::string name) {
  std::vector<Expr> comps = parse_expression_list(source, n, k);
  require_dim(static_cast<Index>(comps.size()), n, "number of field expressions");
  return VectorFieldModel(std::move(name), n, k, std::move(comps));
}

double jacobian_fd_error(const VectorFieldModel& model, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  const Eigen::MatrixXd J = model.eval_jacobian(t, x, u);
  Eigen::MatrixXd fd(J.rows(), J.cols());
  for (Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(j) += h;
    xm(j) -= h;
    fd.col(j) = (model.eval(t, xp, u) - model.eval(t, xm, u)) / (2.0 * h);
  }
  return (J - fd).cwiseAbs().maxCoeff() / std::max(1.0, J.cwiseAbs().maxCoeff());
}

namespace builtin {

namespace {

Expr linear_combination(const Eigen::RowVectorXd& row, const std::vector<Expr>& terms) {
  Expr acc = Expr::constant(0.0);
  for (Index j = 0; j < row.size(); ++j) {
    if (row(j) != 0.0) acc = acc + Expr::constant(row(j)) * terms[static_cast<std::size_t>(j)];
  }
  return acc;
}

std::vector<Expr> state_vars(int n) {
  std::vector<Expr> xs;
  for (int i = 0; i < n; ++i) xs.push_back(Expr::state(i));
  return xs;
}

}  // namespace

VectorFieldModel linear(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols() || A.rows() == 0) throw DimensionError("linear system needs square A");
  const int n = static_cast<int>(A.rows());
  const auto xs = state_vars(n);
  std::vector<Expr> comps;
  std::vector<Expr> factor;
  for (int i = 0; i < n; ++i) {
    comps.push_back(linear_combination(A.row(i), xs));
    for (int j = 0; j < n; ++j) factor.push_back(Expr::constant(A(i, j)));
  }
  return VectorFieldModel("linear", n, 0, std::move(comps), Eigen::VectorXd::Zero(n),
                          std::move(factor));
}

VectorFieldModel counterexample() {
  const Expr x1 = Expr::state(0);
  const Expr x2 = Expr::state(1);
  const Expr a11 = -pow(x2, 2) - Expr::constant(1.0);
  const Expr a22 = pow(x1, 2) - Expr::constant(1.0);
  std::vector<Expr> comps{a11 * x1, a22 * x2};
  std::vector<Expr> factor{a11, Expr::constant(0.0), Expr::constant(0.0), a22};
  return VectorFieldModel("counterexample", 2, 0, std::move(comps), Eigen::VectorXd::Zero(2),
                          std::move(factor));
}

VectorFieldModel hopfield(const Eigen::VectorXd& a, const Eigen::MatrixXd& T,
                          const Eigen::VectorXd& bias) {
  const Index n = a.size();
  if (T.rows() != n || T.cols() != n || bias.size() != n || n == 0) {
    throw DimensionError("hopfield parameters have inconsistent dimensions");
  }
  if ((a.array() <= 0.0).any()) throw std::invalid_argument("hopfield decay rates must be positive");
  std::vector<Expr> activations;
  for (int j = 0; j < n; ++j) activations.push_back(apply(Op::tanh, Expr::state(j)));
  std::vector<Expr> comps;
  for (int i = 0; i < n; ++i) {
    comps.push_back(Expr::constant(-a(i)) * Expr::state(i) + linear_combination(T.row(i), activations) +
                    Expr::constant(bias(i)));
  }
  return VectorFieldModel("hopfield", static_cast<int>(n), 0, std::move(comps));
}

VectorFieldModel scalar_iss(double c, double ell) {
  std::vector<Expr> comps{Expr::constant(-c) * Expr::state(0) + Expr::constant(ell) * Expr::input(0)};
  return VectorFieldModel("scalar_iss", 1, 1, std::move(comps), Eigen::VectorXd::Zero(1));
}

}  // namespace builtin

}  // namespace contraction
