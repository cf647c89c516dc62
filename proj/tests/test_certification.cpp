#include <doctest.h>

#include "contraction/certification.hpp"
#include "contraction/simulation.hpp"
#include "oracles.hpp"

using namespace contraction;

namespace {

SamplingOptions small(int samples = 2000, std::uint64_t seed = 0) {
  SamplingOptions o;
  o.state_samples = samples;
  o.pair_samples = samples;
  o.seed = seed;
  return o;
}

const NormSpec l2 = NormSpec::unweighted(2, 2);

ContractionCertificate osl_cert(double b) {
  return ContractionCertificate{Condition::one_sided_lipschitz, b, l2, default_pairing(l2),
                                Region::cube(2, 1), 1, {}, std::nullopt, {}};
}

}  // namespace

TEST_CASE("linear fields have constant jacobian measure") {
  std::mt19937_64 rng(1);
  for (double p : {1.0, 2.0, kInfinity}) {
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const NormSpec spec = NormSpec::weighted(p, oracle::random_invertible(3, rng));
    const auto cert = sup_jacobian_measure(builtin::linear(A), spec, Region::cube(3, 2), 200, 3);
    CHECK(cert.bound_b == matrix_measure(A, spec).value);
    CHECK(cert.condition == Condition::jacobian_measure);
    CHECK(cert.samples == 200);
  }
}

TEST_CASE("uniform decay certifies -1 under every condition") {
  const auto f = parse_vector_field("-x1; -x2", 2, 0);
  const Region box = Region::cube(2, 2);
  for (double p : {1.0, 1.5, 2.0, 3.0, kInfinity}) {
    CAPTURE(p);
    const NormSpec spec = NormSpec::unweighted(p, 2);
    const PairingKind kind = default_pairing(spec);
    CHECK(sup_jacobian_measure(f, spec, box, small(500)).bound_b == doctest::Approx(-1).epsilon(1e-9));
    CHECK(sup_demidovich(f, spec, kind, box, small(500)).bound_b == doctest::Approx(-1).epsilon(1e-12));
    CHECK(estimate_osL(f, spec, kind, box, small(500)).bound_b == doctest::Approx(-1).epsilon(1e-9));
  }
}

TEST_CASE("counterexample jacobian measure sup includes the grid corner") {
  const auto ce = builtin::counterexample();
  const auto cert = sup_jacobian_measure(ce, l2, Region::cube(2, 2), small(2000));
  const Eigen::MatrixXd J20 = ce.eval_jacobian(0, Eigen::Vector2d(2, 0));
  CHECK(cert.bound_b >= oracle::sym_max_eigenvalue(J20) - 1e-12);
  CHECK(reevaluate(cert, ce) == doctest::Approx(cert.bound_b).epsilon(1e-14));
  CHECK(!cert.contracting());
}

TEST_CASE("demidovich on linear fields") {
  std::mt19937_64 rng(2);
  for (double p : {1.0, 2.0, kInfinity, 3.0}) {
    CAPTURE(p);
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const NormSpec spec = NormSpec::unweighted(p, 3);
    const auto cert = sup_demidovich(builtin::linear(A), spec, default_pairing(spec), Region::cube(3, 1), 50, 16, 4);
    const double mu = matrix_measure(A, spec).value;
    CHECK(cert.bound_b >= measure_lower_bound_sampling(A, spec, default_pairing(spec), 16, 5) - 1e-12);
    CHECK(cert.bound_b <= mu + 1e-8);
    CHECK(cert.bound_b >= mu - 1e-4);
    CHECK(reevaluate(cert, builtin::linear(A)) == doctest::Approx(cert.bound_b));
  }
}

TEST_CASE("counterexample demidovich matches the measure sup") {
  const auto ce = builtin::counterexample();
  const Region box = Region::cube(2, 2);
  const double mu = sup_jacobian_measure(ce, l2, box, small(4000)).bound_b;
  const double dem = sup_demidovich(ce, l2, default_pairing(l2), box, small(4000)).bound_b;
  CHECK(dem <= mu + 1e-9);
  CHECK(mu - dem < 0.05);
}

TEST_CASE("osL of a linear field is the top eigenvalue of its symmetric part") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd A = oracle::random_matrix(2, rng);
  const auto cert = estimate_osL(builtin::linear(A), l2, default_pairing(l2), Region::cube(2, 1), small(2000));
  const double lam = oracle::sym_max_eigenvalue(A);
  CHECK(cert.bound_b <= lam + 1e-9);
  CHECK(cert.bound_b >= lam - 0.05);
  CHECK(reevaluate(cert, builtin::linear(A)) == doctest::Approx(cert.bound_b));
}

TEST_CASE("counterexample osL against the equilibrium is exactly -1") {
  const auto ce = builtin::counterexample();
  std::vector<PairSample> pairs;
  for (const auto& x : sample_region_states(Region::cube(2, 2), 500, 1)) {
    if (x.norm() > 0) pairs.push_back({0.0, x, Eigen::Vector2d::Zero()});
  }
  const auto est = osl_over_pairs(ce, Geometry::of(l2, default_pairing(l2)), pairs);
  CHECK(std::abs(est.value + 1) <= 1e-12);
}

TEST_CASE("equilibrium contraction") {
  const auto ce = builtin::counterexample();
  const auto cert = check_equilibrium_contraction(ce, Eigen::Vector2d::Zero(), l2, default_pairing(l2),
                                                  Region::cube(2, 2), small(3000));
  CHECK(std::abs(cert.bound_b + 1) <= 1e-10);
  CHECK(cert.contracting());
  CHECK(cert.x_star.has_value());

  const auto shifted = parse_vector_field("-x1 + 1; -x2", 2, 0);
  for (double p : {1.0, 2.0, kInfinity}) {
    const NormSpec spec = NormSpec::unweighted(p, 2);
    CHECK(check_equilibrium_contraction(shifted, Eigen::Vector2d(1, 0), spec, default_pairing(spec),
                                        Region::cube(2, 3), small(500))
              .bound_b == doctest::Approx(-1));
  }
  CHECK_THROWS_AS(check_equilibrium_contraction(shifted, Eigen::Vector2d(0, 0), l2, default_pairing(l2),
                                                Region::cube(2, 3), small(500)),
                  PreconditionError);

  std::mt19937_64 rng(4);
  const Eigen::MatrixXd A = oracle::random_matrix(2, rng);
  const double eq = check_equilibrium_contraction(builtin::linear(A), Eigen::Vector2d::Zero(), l2,
                                                  default_pairing(l2), Region::cube(2, 1), small(10000))
                        .bound_b;
  CHECK(eq <= oracle::sym_max_eigenvalue(A) + 1e-9);
  CHECK(eq >= oracle::sym_max_eigenvalue(A) - 1e-3);
}

TEST_CASE("equilibrium contraction is implied by full contraction") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 4; ++k) {
    const auto f = parse_vector_field(oracle::random_smooth_field(2, rng), 2, 0);
    const Region box = Region::cube(2, 1.5);
    const Eigen::VectorXd x_star = find_equilibrium(f, l2, box);
    REQUIRE(box.contains(x_star));
    const double eq = check_equilibrium_contraction(f, x_star, l2, default_pairing(l2), box, small()).bound_b;
    const double osl = estimate_osL(f, l2, default_pairing(l2), box, small()).bound_b;
    CHECK(eq <= osl + 1e-8);
  }
}

TEST_CASE("factored measure separates the counterexample") {
  const auto ce = builtin::counterexample();
  const auto cert = factored_measure(ce, l2, Region::cube(2, 2), small(2000));
  CHECK(std::abs(cert.bound_b - 3) <= 1e-8);
  CHECK(std::abs(std::abs(cert.worst_witness.x(0)) - 2) <= 1e-12);
  CHECK(cert.x_star.has_value());
  const auto eq = check_equilibrium_contraction(ce, Eigen::Vector2d::Zero(), l2, default_pairing(l2),
                                                Region::cube(2, 0.5), small(500));
  CHECK(factored_measure(ce, l2, Region::cube(2, 0.5), small(500)).bound_b > eq.bound_b);
  CHECK_THROWS_AS(factored_measure(parse_vector_field("-x1", 1, 0), NormSpec::unweighted(2, 1), Region::cube(1, 1)),
                  std::invalid_argument);
}

TEST_CASE("perturbation composition") {
  const auto r = compose_perturbation(osl_cert(-2), osl_cert(0.5), 1.0);
  CHECK(r.rate == doctest::Approx(1.5));
  CHECK(r.shift_bound == doctest::Approx(2.0 / 3.0));
  CHECK(compose_perturbation(osl_cert(-1), osl_cert(-1), 0.0).rate == doctest::Approx(2));
  CHECK_THROWS_AS(compose_perturbation(osl_cert(-1), osl_cert(1), 1.0), NoGuaranteeError);
  CHECK_THROWS_AS(compose_perturbation(osl_cert(0.5), osl_cert(-1), 1.0), NoGuaranteeError);
  auto other = osl_cert(0.1);
  other.spec = NormSpec::unweighted(1, 2);
  other.kind = default_pairing(other.spec);
  CHECK_THROWS_AS(compose_perturbation(osl_cert(-2), other, 1.0), std::invalid_argument);
  try {
    compose_perturbation(osl_cert(-1), osl_cert(1.5), 1.0);
  } catch (const NoGuaranteeError& e) {
    CHECK(e.gap() == doctest::Approx(0.5));
  }
}

TEST_CASE("osL algebra") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd A = oracle::random_matrix(2, rng);
  const Eigen::MatrixXd B = oracle::random_matrix(2, rng);
  const auto fa = builtin::linear(A);
  const auto fb = builtin::linear(B);
  const auto r = osl_algebra_check(fa, fb, 3.0, 0.0, l2, default_pairing(l2), Region::cube(2, 1), small(1000));
  CHECK(r.all_ok());
  CHECK(r.osl_scaled == 0.0);
  CHECK(r.osl_sum <= oracle::sym_max_eigenvalue(A) + oracle::sym_max_eigenvalue(B) + 1e-9);
  const auto nl = parse_vector_field("-x1 + sin(x2); -2*x2 + x1^2/4", 2, 0);
  for (double p : {1.0, 2.0, kInfinity}) {
    const NormSpec spec = NormSpec::unweighted(p, 2);
    const auto q = osl_algebra_check(nl, fb, -1.5, 2.5, spec, default_pairing(spec), Region::cube(2, 2), small(1000));
    CHECK(q.all_ok());
  }
  CHECK_THROWS(osl_algebra_check(fa, fb, 1, -1, l2, default_pairing(l2), Region::cube(2, 1)));
}

TEST_CASE("field algebra") {
  const auto f = parse_vector_field("x2; -x1^3", 2, 0);
  const auto g = parse_vector_field("1; t", 2, 0);
  const Eigen::Vector2d x(0.5, -2);
  CHECK((add_fields(f, g).eval(3, x) - Eigen::Vector2d(-1, 2.875)).norm() < 1e-15);
  CHECK((scale_field(f, 2).eval(0, x) - 2 * f.eval(0, x)).norm() < 1e-15);
  CHECK((shift_field(f, 3).eval(0, x) - f.eval(0, x) - 3 * x).norm() < 1e-15);
  CHECK((offset_field(f, Eigen::Vector2d(1, 2)).eval(0, x) - f.eval(0, x) - Eigen::Vector2d(1, 2)).norm() < 1e-15);
  CHECK(add_fields(f, g).time_varying());
  CHECK_THROWS(add_fields(f, parse_vector_field("x1", 1, 0)));
}

TEST_CASE("induced norms and input Lipschitz constants") {
  Eigen::Matrix2d M;
  M << 1, -2, 3, 0.5;
  CHECK(*induced_norm(M, NormSpec::unweighted(1, 2), NormSpec::unweighted(1, 2)) == doctest::Approx(4));
  CHECK(*induced_norm(M, NormSpec::unweighted(kInfinity, 2), NormSpec::unweighted(kInfinity, 2)) == doctest::Approx(3.5));
  CHECK(*induced_norm(M, l2, l2) == doctest::Approx(oracle::induced(M, 2)));
  CHECK(!induced_norm(M, NormSpec::unweighted(3, 2), NormSpec::unweighted(3, 2)).has_value());

  const auto iss = builtin::scalar_iss(2, 1.5);
  const NormSpec s1 = NormSpec::unweighted(2, 1);
  CHECK(estimate_input_lipschitz(iss, s1, s1, Region::cube(1, 1), Region::cube(1, 1), small(200)) ==
        doctest::Approx(1.5));
  const auto mixed = parse_vector_field("-x1 + 2*u1 - u2; -x2 + u2", 2, 2);
  const NormSpec linf = NormSpec::unweighted(kInfinity, 2);
  CHECK(estimate_input_lipschitz(mixed, linf, linf, Region::cube(2, 1), Region::cube(2, 1), small(200)) ==
        doctest::Approx(3));
}

TEST_CASE("witness directions attain the measure") {
  std::mt19937_64 rng(7);
  for (double p : {1.0, 2.0, kInfinity, 3.0}) {
    const NormSpec spec = NormSpec::weighted(p, oracle::random_invertible(3, rng));
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const double mu = matrix_measure(A, spec).value;
    double best = -kInfinity;
    for (const auto& v : measure_witness_directions(A, spec)) {
      const double nv = norm(v, spec);
      best = std::max(best, weak_pairing(Eigen::VectorXd(A * v), v, spec, default_pairing(spec)) / (nv * nv));
    }
    CAPTURE(p);
    CHECK(std::abs(best - mu) <= 1e-6);
  }
}

TEST_CASE("certificates are deterministic and thread independent") {
  const auto hop = builtin::hopfield(Eigen::Vector3d(2, 2, 2), Eigen::Matrix3d::Constant(0.4),
                                     Eigen::Vector3d(0.1, 0, -0.1));
  const NormSpec spec = NormSpec::unweighted(1, 3);
  SamplingOptions one = small(1500, 9);
  SamplingOptions four = one;
  four.threads = 4;
  const auto a = estimate_osL(hop, spec, default_pairing(spec), Region::cube(3, 2), one);
  const auto b = estimate_osL(hop, spec, default_pairing(spec), Region::cube(3, 2), four);
  CHECK(a.bound_b == b.bound_b);
  CHECK(a.worst_witness.x == b.worst_witness.x);
  const auto c = sup_demidovich(hop, spec, default_pairing(spec), Region::cube(3, 2), one);
  const auto d = sup_demidovich(hop, spec, default_pairing(spec), Region::cube(3, 2), four);
  CHECK(c.bound_b == d.bound_b);
}

TEST_CASE("certification input validation") {
  const auto ce = builtin::counterexample();
  CHECK_THROWS_AS(sup_jacobian_measure(ce, NormSpec::unweighted(2, 3), Region::cube(2, 1)), DimensionError);
  CHECK_THROWS_AS(sup_jacobian_measure(ce, l2, Region::cube(3, 1)), DimensionError);
  CHECK_THROWS_AS(sup_demidovich(ce, l2, pairing_kind(PairingVariant::sign_l1), Region::cube(2, 1)), PairingError);
  CHECK_THROWS(Region::box(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)));
  SamplingOptions none = small();
  none.pair_samples = 0;
  CHECK_THROWS(estimate_osL(ce, l2, default_pairing(l2), Region::cube(2, 1), none));
}

TEST_CASE("time-varying models sample over the time window") {
  const auto f = parse_vector_field("(-2 + sin(t))*x1", 1, 0);
  const NormSpec s = NormSpec::unweighted(2, 1);
  const auto cert = sup_jacobian_measure(f, s, Region::cube(1, 1, 0, 3.14159), small(400));
  CHECK(cert.bound_b <= -1 + 1e-12);
  CHECK(cert.bound_b >= -1 - 0.05);
  CHECK(cert.kink_surfaces.empty());
  CHECK(sample_time_states(f, Region::cube(1, 1, 0, 3), 10, small(), 0)[1].first != 0.0);
}
