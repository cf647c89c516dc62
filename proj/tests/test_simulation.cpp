#include <doctest.h>

#include "contraction/certification.hpp"
#include "contraction/simulation.hpp"
#include "oracles.hpp"

#include <sstream>

using namespace contraction;

namespace {
const NormSpec l2 = NormSpec::unweighted(2, 2);
const NormSpec s1 = NormSpec::unweighted(2, 1);
Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }
}  // namespace

TEST_CASE("rk4 on scalar decay") {
  const auto f = parse_vector_field("-x1", 1, 0);
  const auto tr = integrate(f, 0, scalar(1), 1.0, 1e-3);
  CHECK(tr.size() == 1001);
  CHECK(std::abs(tr.states.back()(0) - std::exp(-1.0)) < 1e-8);
  CHECK(tr.final_time() == doctest::Approx(1.0));
  const auto still = integrate(parse_vector_field("0; 0", 2, 0), 0, Eigen::Vector2d(1, 2), 0.5, 0.1);
  for (const auto& x : still.states) CHECK(x == Eigen::Vector2d(1, 2));
  CHECK_THROWS(integrate(f, 0, scalar(1), 1.0, 0.0));
  CHECK_THROWS(integrate(f, 0, scalar(1), 0.0001, 0.1));
  CHECK_THROWS_AS(integrate(f, 0, Eigen::Vector2d(1, 1), 1.0, 0.1), DimensionError);
}

TEST_CASE("rk4 converges at fourth order") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 3; ++k) {
    const Eigen::MatrixXd A = oracle::random_matrix(3, rng);
    const Eigen::VectorXd x0 = oracle::random_vector(3, rng);
    const Eigen::VectorXd exact = oracle::expm(A) * x0;
    const auto model = builtin::linear(A);
    const double e1 = (integrate(model, 0, x0, 1.0, 0.02).states.back() - exact).norm();
    const double e2 = (integrate(model, 0, x0, 1.0, 0.01).states.back() - exact).norm();
    CHECK(std::log2(e1 / e2) > 3.7);
    CHECK(std::log2(e1 / e2) < 4.3);
  }
}

TEST_CASE("blow-up truncates the trajectory") {
  const auto tr = integrate(parse_vector_field("x1^2", 1, 0), 0, scalar(1), 2.0, 1e-3);
  REQUIRE(tr.blowup_time.has_value());
  CHECK(*tr.blowup_time < 1.05);
  CHECK(tr.final_time() < 1.05);
  for (const auto& x : tr.states) CHECK(std::isfinite(x(0)));
}

TEST_CASE("counterexample trajectories decay at rate one") {
  const auto tr = integrate(builtin::counterexample(), 0, Eigen::Vector2d(1, 1), 10, 1e-3);
  const auto zero = constant_trajectory(tr, Eigen::Vector2d::Zero());
  CHECK(envelope_check(tr, zero, l2, -1, 1e-9).pass);
  for (std::size_t k = 0; k < tr.size(); k += 500) {
    CHECK(tr.states[k].norm() <= std::exp(-tr.time(k)) * std::sqrt(2.0) + 1e-9);
  }
}

TEST_CASE("envelope check") {
  const auto f = parse_vector_field("-x1; -x2", 2, 0);
  const auto a = integrate(f, 0, Eigen::Vector2d(1, -2), 5, 1e-3);
  const auto b = integrate(f, 0, Eigen::Vector2d(-0.5, 0.3), 5, 1e-3);
  const auto r = envelope_check(a, b, l2, -1, 1e-6);
  CHECK(r.pass);
  CHECK(r.pairs_checked == a.size() * (a.size() + 1) / 2);
  CHECK(envelope_check(a, a, l2, -3, 0).pass);
  CHECK(!envelope_check(a, b, l2, -1.1, 1e-6).pass);

  const auto g = parse_vector_field("x1; x2", 2, 0);
  const auto c = integrate(g, 0, Eigen::Vector2d(1, 0), 1, 1e-3);
  const auto d = integrate(g, 0, Eigen::Vector2d(0, 0), 1, 1e-3);
  const auto bad = envelope_check(c, d, l2, -1, 1e-6);
  CHECK(!bad.pass);
  CHECK(bad.max_violation > 0);
  CHECK(bad.worst_s < bad.worst_t);
}

TEST_CASE("envelope check covers every grid pair") {
  // Brute force over all pairs on a short trajectory with non-monotone distance.
  const auto f = parse_vector_field("-0.3*x1 + 2*x2; -2*x1 - 0.3*x2", 2, 0);
  const auto a = integrate(f, 0, Eigen::Vector2d(1, 0), 3, 1e-2);
  const auto b = constant_trajectory(a, Eigen::Vector2d::Zero());
  const NormSpec linf = NormSpec::unweighted(kInfinity, 2);
  for (double rate : {-0.3, -0.1, 0.2}) {
    double brute = -kInfinity;
    for (std::size_t s = 0; s < a.size(); ++s) {
      for (std::size_t t = s; t < a.size(); ++t) {
        brute = std::max(brute, norm(a.states[t], linf) -
                                    std::exp(rate * (a.time(t) - a.time(s))) * norm(a.states[s], linf));
      }
    }
    CHECK(envelope_check(a, b, linf, rate, 0).max_violation == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("dini decay") {
  const auto f = parse_vector_field("-x1; -x2", 2, 0);
  const auto a = integrate(f, 0, Eigen::Vector2d(1, -2), 3, 1e-3);
  const auto b = integrate(f, 0, Eigen::Vector2d(-0.5, 0.3), 3, 1e-3);
  const auto r = dini_decay_check(a, b, l2, -1, 1e-8);
  CHECK(r.pass());
  CHECK(r.passing == r.points - r.excluded);
  CHECK(dini_decay_check(a, a, l2, -1, 0).pass());
  CHECK(!dini_decay_check(a, b, l2, -1.5, 1e-8).pass());
}

TEST_CASE("dini check excludes l1 sign changes and they vanish as h shrinks") {
  const auto rot = parse_vector_field("-0.1*x1 + x2; -x1 - 0.1*x2", 2, 0);
  const NormSpec l1 = NormSpec::unweighted(1, 2);
  std::vector<double> excluded_fraction;
  for (double h : {1e-2, 1e-3}) {
    const auto a = integrate(rot, 0, Eigen::Vector2d(1, 0.2), 6, h);
    const auto b = constant_trajectory(a, Eigen::Vector2d::Zero());
    const auto r = dini_decay_check(a, b, l1, -0.1 + 1.0, 1e-8);
    CHECK(r.excluded > 0);
    CHECK(r.pass());
    excluded_fraction.push_back(double(r.excluded) / double(r.points));
  }
  CHECK(excluded_fraction[1] < excluded_fraction[0] / 5);
}

TEST_CASE("coppel inequality") {
  const auto decay = integrate(parse_vector_field("-x1; -x2", 2, 0), 0, Eigen::Vector2d(1, 1), 2, 1e-3);
  const MatrixMap minus_i = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd(-Eigen::MatrixXd::Identity(2, 2)); };
  CHECK(coppel_check(minus_i, decay, l2).pass());

  const auto ce = builtin::counterexample();
  const auto tr = integrate(ce, 0, Eigen::Vector2d(1.5, -1), 5, 1e-3);
  const MatrixMap A = [&](double t, const Eigen::VectorXd& x) { return ce.eval_factor(t, x); };
  const auto r = coppel_check(A, tr, l2);
  CHECK(r.pass());
  CHECK(matrix_measure(ce.eval_factor(0, Eigen::Vector2d(1.5, -1)), l2).value == doctest::Approx(1.25));

  const auto rot = integrate(parse_vector_field("x2; -x1", 2, 0), 0, Eigen::Vector2d(1, 0), 3, 1e-3);
  const MatrixMap S = [](double, const Eigen::VectorXd&) {
    Eigen::MatrixXd m(2, 2);
    m << 0, 1, -1, 0;
    return m;
  };
  CHECK(coppel_check(S, rot, l2).pass());
}

TEST_CASE("gronwall bound") {
  // phi' = m phi + r with constant m, r: bound equals the exact solution.
  const double h = 1e-3;
  std::vector<double> m(2001, -1.0);
  std::vector<double> r(2001, 0.5);
  const auto bound = gronwall_bound(2.0, m, r, h);
  for (std::size_t k = 0; k < bound.size(); k += 400) {
    const double t = h * double(k);
    CHECK(bound[k] == doctest::Approx(0.5 + 1.5 * std::exp(-t)).epsilon(1e-6));
  }
  // A measured signal with D+ phi <= m phi + r stays below the bound.
  std::vector<double> mt(2001);
  std::vector<double> rt(2001);
  for (std::size_t k = 0; k < mt.size(); ++k) {
    mt[k] = -1 + std::sin(h * double(k));
    rt[k] = 0.2;
  }
  const auto g = gronwall_bound(1.0, mt, rt, h);
  const auto phi_model = parse_vector_field("(-1 + sin(t))*x1 + 0.1", 1, 0);
  const auto phi = integrate(phi_model, 0, scalar(1), 2, h);
  for (std::size_t k = 0; k < phi.size(); ++k) CHECK(phi.states[k](0) <= g[k] + 1e-6);
}

TEST_CASE("iss experiment reproduces the scalar closed form") {
  const auto iss = builtin::scalar_iss(2, 1);
  const Signal one = [](double) { return scalar(1); };
  const Signal zero = [](double) { return scalar(0); };
  const auto r = iss_experiment(iss, one, zero, scalar(0), scalar(0), 2, 1, s1, s1, 5, 1e-3);
  CHECK(r.pass);
  for (std::size_t k = 0; k < r.times.size(); k += 100) {
    CHECK(std::abs(r.distance[k] - (1 - std::exp(-2 * r.times[k])) / 2) <= 1e-6 + 1e-3);
  }
  const auto same = iss_experiment(iss, one, one, scalar(0.3), scalar(0.3), 2, 1, s1, s1, 2, 1e-3);
  CHECK(*std::max_element(same.distance.begin(), same.distance.end()) == 0.0);
  const auto decay = iss_experiment(iss, one, one, scalar(1), scalar(0), 2, 1, s1, s1, 2, 1e-3);
  for (std::size_t k = 0; k < decay.times.size(); k += 100) {
    CHECK(decay.distance[k] == doctest::Approx(std::exp(-2 * decay.times[k])).epsilon(1e-9));
  }
  CHECK_THROWS(iss_experiment(iss, one, zero, scalar(0), scalar(0), -1, 1, s1, s1, 1, 1e-3));
  const auto eq = iss_equilibrium_experiment(iss, one, scalar(0), scalar(0), scalar(0), 2, 1, s1, s1, 3, 1e-3);
  CHECK(eq.pass);
}

TEST_CASE("instantaneous separation with differing inputs") {
  const auto f = parse_vector_field("-x1 + sin(x2) + u1; -2*x2 + 3*u2", 2, 2);
  const Signal ua = [](double t) { return Eigen::Vector2d(std::cos(t), 1); };
  const Signal ub = [](double) { return Eigen::Vector2d(0, -1); };
  const Eigen::Vector2d x0(0.3, 0.4);
  const auto a = integrate(f, 0, x0, 1e-3, 1e-3, ua);
  const auto b = integrate(f, 0, x0, 1e-3, 1e-3, ub);
  const NormSpec linf = NormSpec::unweighted(kInfinity, 2);
  const double ell = estimate_input_lipschitz(f, linf, linf, Region::cube(2, 1), Region::cube(2, 1));
  const double slope = norm(Eigen::VectorXd(a.states[1] - b.states[1]), linf) / 1e-3;
  CHECK(slope <= ell * norm(Eigen::VectorXd(ua(0) - ub(0)), linf) + 1e-2);
}

TEST_CASE("gain measurement") {
  const auto iss = builtin::scalar_iss(2, 1);
  const Signal step = [](double) { return scalar(1); };
  const auto r = measure_gain(iss, 2, 1, s1, s1, kInfinity, {step}, 20, 1e-3);
  CHECK(r.bound == 0.5);
  CHECK(r.measured >= 0.499);
  CHECK(r.measured <= 0.501);
  const Signal decaying = [](double t) { return scalar(std::exp(-t)); };
  const auto q1 = measure_gain(iss, 2, 1, s1, s1, 1.0, {decaying}, 20, 1e-3);
  // x = e^{-t} - e^{-2t}, so ||x||_1 = 1/2 and ||u||_1 = 1.
  CHECK(q1.measured == doctest::Approx(0.5).epsilon(1e-4));
  const Signal nothing = [](double) { return scalar(0); };
  CHECK_THROWS(measure_gain(iss, 2, 1, s1, s1, kInfinity, {nothing}, 1, 1e-3));
}

TEST_CASE("equilibrium search") {
  const auto f = parse_vector_field("-x1 + 1", 1, 0);
  CHECK(find_equilibrium(f, s1, Region::cube(1, 3))(0) == doctest::Approx(1).epsilon(1e-9));
  CHECK(find_equilibrium(builtin::counterexample(), l2, Region::cube(2, 1)).norm() < 1e-9);
  const auto g = parse_vector_field("-x1 + 0.1*tanh(x1)", 1, 0);
  CHECK(std::abs(find_equilibrium(g, s1, Region::box(scalar(-1), scalar(2)))(0)) < 1e-9);
  CHECK_THROWS_AS(find_equilibrium(parse_vector_field("1", 1, 0), s1, Region::cube(1, 1), 5.0), ConvergenceError);
}

TEST_CASE("csv output") {
  const auto tr = integrate(builtin::scalar_iss(1, 1), 0, scalar(0), 0.002, 1e-3, [](double) { return scalar(2); });
  std::ostringstream os;
  write_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x1,u1");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
}
