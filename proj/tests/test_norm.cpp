#include <doctest.h>

#include "contraction/norm.hpp"
#include "oracles.hpp"

#include <array>

using namespace contraction;

TEST_CASE("norm values") {
  CHECK(norm(Eigen::Vector2d(3, -4), NormSpec::unweighted(2, 2)) == doctest::Approx(5.0));
  CHECK(norm(Eigen::Vector2d(3, -1), NormSpec::unweighted(1, 2)) == doctest::Approx(4.0));
  Eigen::Matrix2d R;
  R << 2, 0, 0, 3;
  CHECK(norm(Eigen::Vector2d(1, 1), NormSpec::weighted(kInfinity, R)) == doctest::Approx(3.0));
  CHECK(norm(Eigen::Vector3d(1, 2, 2), NormSpec::unweighted(3, 3)) ==
        doctest::Approx(std::cbrt(17.0)));
}

TEST_CASE("spd weight uses the symmetric square root") {
  Eigen::Matrix2d P;
  P << 2, 1, 1, 3;
  const NormSpec spec = NormSpec::from_spd(P);
  const Eigen::Vector2d x(0.7, -1.3);
  CHECK(norm(x, spec) == doctest::Approx(std::sqrt(x.dot(P * x))).epsilon(1e-14));
  CHECK((spec.weight() - spec.weight().transpose()).norm() < 1e-14);
  CHECK_THROWS_AS(NormSpec::from_spd(-P), std::invalid_argument);
  Eigen::Matrix2d asym = P;
  asym(0, 1) = 0.0;
  CHECK_THROWS_AS(NormSpec::from_spd(asym), std::invalid_argument);
}

TEST_CASE("norm spec validation") {
  CHECK_THROWS_AS(NormSpec::unweighted(0.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::unweighted(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::weighted(2, Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(NormSpec::weighted(2, Eigen::MatrixXd::Identity(2, 3)), DimensionError);
  CHECK_THROWS_AS(norm(Eigen::Vector3d(1, 2, 3), NormSpec::unweighted(2, 2)), DimensionError);
}

TEST_CASE("infinity index set") {
  CHECK(inf_index_set(Eigen::Vector3d(2, -2, 1)) == std::vector<Index>{0, 1});
  CHECK(inf_index_set(Eigen::Vector2d(0, 0)) == std::vector<Index>{0, 1});
  CHECK(inf_index_set(Eigen::Vector3d(1, -5, 3)) == std::vector<Index>{1});
}

TEST_CASE("unit sphere samples lie on the sphere") {
  auto one = sample_unit_sphere(NormSpec::unweighted(2, 2), 1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].norm() == doctest::Approx(1.0));
  for (const auto& x : sample_unit_sphere(NormSpec::unweighted(kInfinity, 3), 100, 4)) {
    CHECK(x.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  }
  const NormSpec w = NormSpec::weighted(1, Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix());
  for (const auto& x : sample_unit_sphere(w, 10, 1)) {
    CHECK((2 * std::abs(x(0)) + std::abs(x(1))) == doctest::Approx(1.0));
  }
  CHECK(sample_unit_sphere(w, 10, 7) == sample_unit_sphere(w, 10, 7));
  CHECK_THROWS(sample_unit_sphere(w, 0, 1));
}

TEST_CASE("norm axioms on random samples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 5;
    const double p = std::array<double, 5>{1.0, 1.5, 2.0, 4.0, kInfinity}[trial % 5];
    const NormSpec spec = NormSpec::weighted(p, oracle::random_invertible(n, rng));
    const Eigen::VectorXd x = oracle::random_vector(n, rng);
    const Eigen::VectorXd y = oracle::random_vector(n, rng);
    const double c = oracle::random_vector(1, rng)(0) * 3.0;
    CHECK(std::abs(norm(Eigen::VectorXd(c * x), spec) - std::abs(c) * norm(x, spec)) <= 1e-12 * (1 + std::abs(c) * norm(x, spec)));
    CHECK(norm(Eigen::VectorXd(x + y), spec) <= norm(x, spec) + norm(y, spec) + 1e-12);
    const NormSpec plain = NormSpec::unweighted(p, n);
    CHECK(x.cwiseAbs().maxCoeff() <= norm(x, plain) + 1e-12);
    CHECK(norm(x, plain) <= x.cwiseAbs().sum() + 1e-12);
  }
}

TEST_CASE("lp norm is overflow safe") {
  Eigen::Vector2d big(1e200, 1e200);
  CHECK(lp_norm(big, 3.0) == doctest::Approx(1e200 * std::cbrt(2.0)));
  Eigen::Vector2d small(1e-200, 0);
  CHECK(lp_norm(small, 3.0) == doctest::Approx(1e-200));
}

TEST_CASE("signal norms") {
  const NormSpec l2 = NormSpec::unweighted(2, 2);
  std::vector<double> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back(0.1 * k);
  std::vector<Eigen::VectorXd> constant(grid.size(), Eigen::Vector2d(1, 0));
  CHECK(signal_norm(constant, SignalNorm{kInfinity, l2, grid}) == doctest::Approx(1.0));

  const NormSpec scalar = NormSpec::unweighted(2, 1);
  std::vector<Eigen::VectorXd> decay;
  for (double t : grid) decay.push_back(Eigen::VectorXd::Constant(1, std::exp(-t)));
  CHECK(signal_norm(decay, SignalNorm{kInfinity, scalar, grid}) == doctest::Approx(1.0));

  std::vector<double> fine;
  std::vector<Eigen::VectorXd> fine_decay;
  for (int k = 0; k <= 10000; ++k) {
    fine.push_back(1e-3 * k);
    fine_decay.push_back(Eigen::VectorXd::Constant(1, std::exp(-1e-3 * k)));
  }
  CHECK(std::abs(signal_norm(fine_decay, SignalNorm{1.0, scalar, fine}) - (1 - std::exp(-10.0))) < 1e-6);

  // q = 2 against Simpson quadrature of e^{-2t} on [0, 10].
  double simpson = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double w = (k == 0 || k == 10000) ? 1 : (k % 2 ? 4 : 2);
    simpson += w * std::exp(-2e-3 * k);
  }
  simpson *= 1e-3 / 3.0;
  CHECK(signal_norm(fine_decay, SignalNorm{2.0, scalar, fine}) == doctest::Approx(std::sqrt(simpson)).epsilon(1e-6));

  CHECK_THROWS(signal_norm(decay, SignalNorm{0.5, scalar, grid}));
  std::vector<double> bad = grid;
  bad[3] = bad[2];
  CHECK_THROWS(signal_norm(decay, SignalNorm{1.0, scalar, bad}));
  CHECK_THROWS_AS(signal_norm(constant, SignalNorm{1.0, l2, std::vector<double>{0.0, 1.0}}), DimensionError);
}
