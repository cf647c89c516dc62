#include <doctest.h>

#include "contraction/norm.hpp"
#include "contraction/vector_field.hpp"
#include "oracles.hpp"

using namespace contraction;

TEST_CASE("parse and differentiate") {
  const auto f = parse_vector_field("-x1 + tanh(x2); -x2", 2, 0);
  const Eigen::MatrixXd J = f.eval_jacobian(0, Eigen::Vector2d(0, 0));
  Eigen::Matrix2d expected;
  expected << -1, 1, 0, -1;
  CHECK((J - expected).norm() < 1e-15);
  const Eigen::Vector2d x(0.3, 0.8);
  CHECK(f.eval_jacobian(0, x)(0, 1) == doctest::Approx(1 - std::pow(std::tanh(0.8), 2)));

  const auto zero = parse_vector_field("0; 0", 2, 0);
  CHECK(zero.eval(0, x).norm() == 0.0);
  CHECK(zero.eval_jacobian(0, x).norm() == 0.0);

  const auto skew = parse_vector_field("x2; -x1", 2, 0);
  Eigen::Matrix2d S;
  S << 0, 1, -1, 0;
  CHECK((skew.eval_jacobian(0, x) - S).norm() == 0.0);
}

TEST_CASE("parser details") {
  CHECK(evaluate(parse_expression("2^3 - 4/2*3", 0, 0), {}) == doctest::Approx(2.0));
  CHECK(evaluate(parse_expression("\xE2\x88\x92x1", 1, 0), {0.0, std::vector<double>{2.0}, {}}) == -2.0);
  CHECK(evaluate(parse_expression("x1^-2", 1, 0), {0.0, std::vector<double>{2.0}, {}}) == 0.25);
  CHECK_THROWS_AS(parse_expression("x3", 2, 0), ParseError);
  CHECK_THROWS_AS(parse_expression("u1", 1, 0), ParseError);
  CHECK_THROWS_AS(parse_expression("1 +", 1, 0), ParseError);
  CHECK_THROWS_AS(parse_expression("foo(x1)", 1, 0), ParseError);
  CHECK_THROWS_AS(parse_expression("(x1", 1, 0), ParseError);
  try {
    parse_expression("x1 + )", 1, 0);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(parse_vector_field("x1", 2, 0), DimensionError);
}

TEST_CASE("printing round-trips") {
  for (const char* src : {"-x1 + tanh(x2) * sin(t)", "abs(x1 - x2)^3 / (1 + exp(-x1))", "u1 * cos(x2) - 0.25"}) {
    const Expr e = parse_expression(src, 2, 1);
    CHECK(structurally_equal(parse_expression(to_string(e), 2, 1), e));
  }
  const auto f = parse_vector_field("x2; -sin(x1) - 0.1*x2 + u1", 2, 1);
  const auto g = parse_vector_field(f.to_source(), 2, 1);
  CHECK((f.eval(0.3, Eigen::Vector2d(0.2, -1), Eigen::VectorXd::Constant(1, 0.5)) -
         g.eval(0.3, Eigen::Vector2d(0.2, -1), Eigen::VectorXd::Constant(1, 0.5)))
            .norm() == 0.0);
}

TEST_CASE("abs differentiates to sign with sign(0) = 0") {
  const auto f = parse_vector_field("abs(x1)", 1, 0);
  CHECK(f.eval_jacobian(0, Eigen::VectorXd::Constant(1, 0.0))(0, 0) == 0.0);
  CHECK(f.eval_jacobian(0, Eigen::VectorXd::Constant(1, -2.0))(0, 0) == -1.0);
  CHECK(f.kink_surfaces() == std::vector<std::string>{"x1 = 0"});
}

TEST_CASE("evaluation errors name the component") {
  const auto f = parse_vector_field("x1; 1 / x2", 2, 0);
  try {
    f.eval(0, Eigen::Vector2d(1, 0));
    FAIL("expected an evaluation error");
  } catch (const EvalError& e) {
    CHECK(e.component() == 1);
  }
}

TEST_CASE("time and input dependence") {
  const auto f = parse_vector_field("-x1 + t*u1", 1, 1);
  CHECK(f.time_varying());
  CHECK(f.eval(2, Eigen::VectorXd::Constant(1, 1), Eigen::VectorXd::Constant(1, 3))(0) == 5);
  CHECK(f.eval(2, Eigen::VectorXd::Constant(1, 1))(0) == -1);
  CHECK(f.eval_input_jacobian(2, Eigen::VectorXd::Constant(1, 1))(0, 0) == 2);
  CHECK(!parse_vector_field("-x1", 1, 0).time_varying());
}

TEST_CASE("builtins") {
  const auto ce = builtin::counterexample();
  const Eigen::Vector2d one(1, 1);
  CHECK((ce.eval(0, one) - Eigen::Vector2d(-2, 0)).norm() == 0.0);
  Eigen::Matrix2d J;
  J << -2, -2, 2, 0;
  CHECK((ce.eval_jacobian(0, one) - J).norm() < 1e-15);
  CHECK(ce.has_factorization());
  Eigen::Matrix2d A;
  A << -2, 0, 0, 0;
  CHECK((ce.eval_factor(0, one) - A).norm() == 0.0);

  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = oracle::random_vector(2, rng, 2.0);
    CHECK(std::abs(x.dot(ce.eval(0, x)) + x.squaredNorm()) <= 1e-12 * (1 + x.squaredNorm() * x.squaredNorm()));
    CHECK((ce.eval(0, x) - ce.eval_factor(0, x) * x).norm() <= 1e-12 * (1 + x.squaredNorm()));
  }

  Eigen::Matrix3d L;
  L << -1, 2, 0, 0, -3, 1, 4, 0, -2;
  const auto lin = builtin::linear(L);
  const Eigen::Vector3d x(0.5, -1, 2);
  CHECK((lin.eval(0, x) - L * x).norm() < 1e-14);
  CHECK((lin.eval_jacobian(0, x) - L).norm() == 0.0);

  const auto iss = builtin::scalar_iss(2, 1);
  CHECK(iss.eval(0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1))(0) == 1.0);

  const auto hop = builtin::hopfield(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.5, 0));
  CHECK(hop.eval(0, Eigen::Vector2d(0, 0))(0) == 0.5);
  CHECK_THROWS(builtin::hopfield(Eigen::Vector2d(-1, 2), Eigen::Matrix2d::Identity(), Eigen::Vector2d(0, 0)));
}

TEST_CASE("symbolic and finite-difference jacobians agree") {
  std::mt19937_64 rng(12);
  std::vector<VectorFieldModel> models{builtin::counterexample(),
                                       builtin::hopfield(Eigen::Vector3d(1, 2, 1.5), oracle::random_matrix(3, rng),
                                                         Eigen::Vector3d(0.1, 0, -0.2)),
                                       builtin::linear(oracle::random_matrix(4, rng)),
                                       parse_vector_field("x2*exp(-x1^2); -sin(x1)*cos(x2) + t", 2, 0)};
  for (int k = 0; k < 10; ++k) {
    const int n = 2 + k % 2;
    models.push_back(parse_vector_field(oracle::random_smooth_field(n, rng), n, 0));
  }
  for (const auto& m : models) {
    for (int s = 0; s < 20; ++s) {
      const Eigen::VectorXd x = oracle::random_vector(m.state_dim(), rng, 1.5);
      CHECK(jacobian_fd_error(m, 0.4, x) <= 1e-5);
    }
  }
}
