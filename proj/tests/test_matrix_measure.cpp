#include <doctest.h>

#include "contraction/matrix_measure.hpp"
#include "oracles.hpp"

#include <array>

using namespace contraction;

namespace {
Eigen::Matrix2d mat(double a, double b, double c, double d) {
  Eigen::Matrix2d m;
  m << a, b, c, d;
  return m;
}
}  // namespace

TEST_CASE("closed-form measures") {
  const Eigen::MatrixXd A = mat(-3, 1, 2, -4);
  CHECK(matrix_measure(A, NormSpec::unweighted(1, 2)).value == doctest::Approx(-1));
  CHECK(matrix_measure(A, NormSpec::unweighted(kInfinity, 2)).value == doctest::Approx(-2));
  const Eigen::MatrixXd S = mat(-3, 1.5, 1.5, -4);
  CHECK(matrix_measure(S, NormSpec::unweighted(2, 2)).value == doctest::Approx(-3.5 + std::sqrt(2.5)).epsilon(1e-14));
  CHECK(matrix_measure(Eigen::MatrixXd(mat(0, 10, 0, 0)), NormSpec::unweighted(1, 2)).value == doctest::Approx(10));
  for (double p : {1.0, 1.7, 2.0, 3.0, kInfinity}) {
    const auto r = matrix_measure(Eigen::MatrixXd(2.5 * Eigen::MatrixXd::Identity(3, 3)), NormSpec::unweighted(p, 3));
    CHECK(r.value == doctest::Approx(2.5).epsilon(1e-9));
  }
  CHECK(matrix_measure(A, NormSpec::unweighted(1, 2)).method == MeasureMethod::closed_form);
  CHECK(matrix_measure(A, NormSpec::unweighted(3, 2)).method == MeasureMethod::optimized);
}

TEST_CASE("measure input validation") {
  CHECK_THROWS_AS(matrix_measure(Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 3)), NormSpec::unweighted(2, 2)), DimensionError);
  CHECK_THROWS_AS(matrix_measure(Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3)), NormSpec::unweighted(2, 2)), DimensionError);
}

TEST_CASE("closed forms match the defining limit") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 120; ++k) {
    const int n = 2 + k % 6;
    const double p = std::array<double, 3>{1.0, 2.0, kInfinity}[k % 3];
    const Eigen::MatrixXd A = oracle::random_matrix(n, rng);
    const Eigen::MatrixXd R = oracle::random_invertible(n, rng);
    const double mu = matrix_measure(A, NormSpec::weighted(p, R)).value;
    CHECK(std::abs(mu - oracle::measure_by_limit(A, p, R)) < 1e-5);
    // Weighted similarity.
    const Eigen::MatrixXd B = R * A * R.inverse();
    CHECK(std::abs(mu - matrix_measure(B, NormSpec::unweighted(p, n)).value) <= 1e-10 * (1 + std::abs(mu)));
  }
}

TEST_CASE("l2 measure is the top eigenvalue of the symmetric part") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd A = oracle::random_matrix(2 + k % 5, rng);
    CHECK(matrix_measure(A, NormSpec::unweighted(2, A.rows())).value ==
          doctest::Approx(oracle::sym_max_eigenvalue(A)).epsilon(1e-12));
  }
  Eigen::Matrix2d P;
  P << 2, 0.5, 0.5, 1;
  const Eigen::MatrixXd A = mat(-1, 2, 0, -3);
  // mu_P(A) = max eig of P^{-1/2} sym(P A) P^{-1/2}, equivalently of the pencil (sym(PA), P).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges((P * A + A.transpose() * P) / 2, P);
  CHECK(matrix_measure(A, NormSpec::from_spd(P)).value == doctest::Approx(ges.eigenvalues().maxCoeff()));
}

TEST_CASE("optimized measure matches closed forms") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 60; ++k) {
    const int n = 2 + k % 7;
    const double p = std::array<double, 3>{1.0, 2.0, kInfinity}[k % 3];
    const NormSpec spec = p == 2.0 ? NormSpec::from_spd(oracle::random_spd(n, rng))
                                   : NormSpec::weighted(p, oracle::random_invertible(n, rng));
    const Eigen::MatrixXd A = oracle::random_matrix(n, rng);
    const double closed = matrix_measure(A, spec).value;
    const auto opt = optimized_measure(A, spec);
    CHECK(std::abs(opt.value - closed) <= 1e-6);
    CHECK(norm(opt.witness, spec) == doctest::Approx(1.0));
    CHECK(measure_lower_bound_sampling(A, spec, default_pairing(spec), 500, k) <= closed + 1e-8);
  }
}

TEST_CASE("sampled lower bound approaches the measure") {
  const Eigen::MatrixXd A = mat(-3, 1, 2, -4);
  const NormSpec l1 = NormSpec::unweighted(1, 2);
  const double lb = measure_lower_bound_sampling(A, l1, default_pairing(l1), 10000, 0);
  CHECK(lb <= -1 + 1e-12);
  CHECK(lb >= -1 - 0.05);
  const NormSpec l2 = NormSpec::unweighted(2, 2);
  CHECK(std::abs(measure_lower_bound_sampling(Eigen::MatrixXd(mat(0, 1, -1, 0)), l2, default_pairing(l2), 100, 1)) < 1e-15);
  CHECK(measure_lower_bound_sampling(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), l1, default_pairing(l1), 10, 2) ==
        doctest::Approx(1.0));
}

TEST_CASE("measure properties") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 60; ++k) {
    const int n = 2 + k % 4;
    const double p = std::array<double, 4>{1.0, 2.0, kInfinity, 3.0}[k % 4];
    const NormSpec spec = NormSpec::weighted(p, oracle::random_invertible(n, rng));
    const auto r = measure_properties_check(oracle::random_matrix(n, rng), oracle::random_matrix(n, rng), 5.0,
                                            0.5 + k % 3, spec, p == 3.0 ? 1e-6 : 1e-8);
    CAPTURE(p);
    CHECK(r.shift_ok);
    CHECK(r.scaling_ok);
    CHECK(r.subadditive_ok);
    CHECK(r.spectral_ok);
  }
}

TEST_CASE("measure is continuous in p") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const double mu1 = matrix_measure(A, NormSpec::unweighted(1, 3)).value;
    const double muinf = matrix_measure(A, NormSpec::unweighted(kInfinity, 3)).value;
    CHECK(std::abs(matrix_measure(A, NormSpec::unweighted(1.001, 3)).value - mu1) < 5e-2);
    CHECK(std::abs(matrix_measure(A, NormSpec::unweighted(1000, 3)).value - muinf) < 5e-2);
  }
}

TEST_CASE("spectral abscissa bounds the measure for general p") {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const double lam = oracle::max_real_eigenvalue(A);
    for (double p : {1.3, 3.0, 6.0}) CHECK(lam <= matrix_measure(A, NormSpec::unweighted(p, 3)).value + 1e-8);
  }
}

TEST_CASE("float scalar instantiation") {
  Eigen::MatrixXf A(2, 2);
  A << -3, 1, 2, -4;
  CHECK(matrix_measure(A, BasicNormSpec<float>::unweighted(1.0f, 2)).value == doctest::Approx(-1.0f));
}
