#include "contraction/simulation.hpp"

#include "contraction/matrix_measure.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace contraction {

std::vector<double> Trajectory::times() const {
  std::vector<double> out(states.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = time(k);
  return out;
}

namespace {

std::size_t step_count(double T, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step h must be positive");
  if (!(T >= h) || !std::isfinite(T)) throw std::invalid_argument("horizon T must satisfy T >= h");
  return static_cast<std::size_t>(std::llround(T / h));
}

bool finite(const Eigen::VectorXd& x) { return x.allFinite(); }

void require_same_grid(const Trajectory& x, const Trajectory& y) {
  if (x.size() != y.size() || x.t0 != y.t0 || x.h != y.h) {
    throw std::invalid_argument("trajectories are not on the same time grid");
  }
  if (x.size() < 2) throw std::invalid_argument("trajectories need at least two grid points");
}

std::vector<double> distances(const Trajectory& x, const Trajectory& y, const Distance& distance) {
  std::vector<double> d(x.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = distance(x.states[k] - y.states[k]);
  return d;
}

// Shared body of the Dini-type checks: (d[k+1] - d[k]) / h <= rhs[k] + tol + L h.
DiniReport dini_core(const std::vector<double>& d, const std::vector<double>& rhs,
                     const std::vector<bool>& excluded, double h, double tol) {
  const std::size_t n = d.size() - 1;
  std::vector<double> D(n);
  for (std::size_t k = 0; k < n; ++k) D[k] = (d[k + 1] - d[k]) / h;
  double L = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (!excluded[k] && !excluded[k + 1]) L = std::max(L, std::abs(D[k + 1] - D[k]) / h);
  }
  DiniReport r{n, 0, 0, -std::numeric_limits<double>::infinity(), tol + L * h};
  for (std::size_t k = 0; k < n; ++k) {
    if (excluded[k]) {
      ++r.excluded;
      continue;
    }
    const double excess = D[k] - rhs[k] - r.margin;
    r.worst_excess = std::max(r.worst_excess, excess);
    if (excess <= 0.0) ++r.passing;
  }
  return r;
}

}  // namespace

Trajectory integrate(const Rhs& rhs, double t0, const Eigen::VectorXd& x0, double T, double h) {
  const std::size_t steps = step_count(T, h);
  if (!finite(x0)) throw std::invalid_argument("initial state must be finite");
  Trajectory traj{t0, h, {}, {}, std::nullopt};
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = traj.time(k);
    const Eigen::VectorXd k1 = rhs(t, x);
    const Eigen::VectorXd k2 = rhs(t + h / 2, x + h / 2 * k1);
    const Eigen::VectorXd k3 = rhs(t + h / 2, x + h / 2 * k2);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!finite(x)) {
      traj.blowup_time = traj.time(k + 1);
      break;
    }
    traj.states.push_back(x);
  }
  return traj;
}

Trajectory integrate(const VectorFieldModel& model, double t0, const Eigen::VectorXd& x0, double T,
                     double h, const Signal& u) {
  require_dim(x0.size(), model.state_dim(), "initial state");
  Rhs rhs;
  if (u) {
    rhs = [&](double t, const Eigen::VectorXd& x) { return model.eval(t, x, u(t)); };
  } else {
    rhs = [&](double t, const Eigen::VectorXd& x) { return model.eval(t, x); };
  }
  Trajectory traj = integrate(rhs, t0, x0, T, h);
  if (u) {
    traj.inputs.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) traj.inputs.push_back(u(traj.time(k)));
  }
  return traj;
}

Trajectory constant_trajectory(const Trajectory& like, const Eigen::VectorXd& x) {
  return Trajectory{like.t0, like.h, std::vector<Eigen::VectorXd>(like.size(), x), {}, std::nullopt};
}

Distance distance_of(const NormSpec& spec) {
  return [spec](const Eigen::VectorXd& v) { return norm(v, spec); };
}

KinkDetector kink_detector_of(const NormSpec& spec) {
  if (spec.is_l1()) {
    return [spec](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      const Eigen::VectorXd za = spec.apply(a);
      const Eigen::VectorXd zb = spec.apply(b);
      for (Index i = 0; i < za.size(); ++i) {
        if (sign(za(i)) != sign(zb(i))) return true;
      }
      return false;
    };
  }
  if (spec.is_linf()) {
    return [spec](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return inf_index_set(Eigen::VectorXd(spec.apply(a))) !=
             inf_index_set(Eigen::VectorXd(spec.apply(b)));
    };
  }
  return [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return false; };
}

EnvelopeReport envelope_check(const Trajectory& x, const Trajectory& y, const Distance& distance,
                              double b, double tol) {
  require_same_grid(x, y);
  const std::vector<double> d = distances(x, y, distance);
  // max_s d(t) - e^{b(t-s)} d(s) = d(t) - e^{b t} min_s e^{-b s} d(s), tracked in log scale.
  EnvelopeReport r{b, -std::numeric_limits<double>::infinity(), false, 0, 0,
                   d.size() * (d.size() + 1) / 2};
  double min_log = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double s = static_cast<double>(k) * x.h;
    const double lg = d[k] > 0.0 ? std::log(d[k]) - b * s : -std::numeric_limits<double>::infinity();
    if (lg < min_log) {
      min_log = lg;
      arg = k;
    }
    const double violation = d[k] - std::exp(b * s + min_log);
    if (violation > r.max_violation) {
      r.max_violation = violation;
      r.worst_s = arg;
      r.worst_t = k;
    }
  }
  r.pass = r.max_violation <= tol;
  return r;
}

EnvelopeReport envelope_check(const Trajectory& x, const Trajectory& y, const NormSpec& spec,
                              double b, double tol) {
  return envelope_check(x, y, distance_of(spec), b, tol);
}

double DiniReport::fraction() const {
  const std::size_t checked = points - excluded;
  return checked == 0 ? 1.0 : static_cast<double>(passing) / static_cast<double>(checked);
}

DiniReport dini_decay_check(const Trajectory& x, const Trajectory& y, const Distance& distance,
                            const KinkDetector& kinks, double b, double tol) {
  require_same_grid(x, y);
  const std::vector<double> d = distances(x, y, distance);
  std::vector<double> rhs(d.size() - 1);
  std::vector<bool> excluded(d.size() - 1, false);
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    rhs[k] = b * d[k];
    if (kinks) excluded[k] = kinks(x.states[k] - y.states[k], x.states[k + 1] - y.states[k + 1]);
  }
  return dini_core(d, rhs, excluded, x.h, tol);
}

DiniReport dini_decay_check(const Trajectory& x, const Trajectory& y, const NormSpec& spec, double b,
                            double tol) {
  return dini_decay_check(x, y, distance_of(spec), kink_detector_of(spec), b, tol);
}

DiniReport coppel_check(const MatrixMap& A, const Trajectory& traj, const Distance& distance,
                        const MeasureFn& measure, const KinkDetector& kinks, double tol) {
  if (traj.size() < 2) throw std::invalid_argument("trajectory needs at least two grid points");
  std::vector<double> d(traj.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = distance(traj.states[k]);
  std::vector<double> rhs(d.size() - 1);
  std::vector<bool> excluded(d.size() - 1, false);
  for (std::size_t k = 0; k + 1 < d.size(); ++k) {
    rhs[k] = measure(A(traj.time(k), traj.states[k])) * d[k];
    if (kinks) excluded[k] = kinks(traj.states[k], traj.states[k + 1]);
  }
  return dini_core(d, rhs, excluded, traj.h, tol);
}

DiniReport coppel_check(const MatrixMap& A, const Trajectory& traj, const NormSpec& spec, double tol) {
  return coppel_check(A, traj, distance_of(spec),
                      [spec](const Eigen::MatrixXd& M) { return matrix_measure(M, spec).value; },
                      kink_detector_of(spec), tol);
}

std::vector<double> gronwall_bound(double phi0, const std::vector<double>& m,
                                   const std::vector<double>& r, double h) {
  if (m.size() != r.size() || m.empty()) throw DimensionError("gronwall inputs must align");
  std::vector<double> out(m.size());
  double M = 0.0;
  double acc = 0.0;  // int_0^t r e^{-M}
  out[0] = phi0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    const double M_prev = M;
    M += 0.5 * h * (m[k - 1] + m[k]);
    acc += 0.5 * h * (r[k - 1] * std::exp(-M_prev) + r[k] * std::exp(-M));
    out[k] = std::exp(M) * (phi0 + acc);
  }
  return out;
}

IssReport iss_experiment(const VectorFieldModel& model, const Signal& u_x, const Signal& u_y,
                         const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, double c, double ell,
                         const NormSpec& spec_x, const NormSpec& spec_u, double T, double h,
                         double tol) {
  if (!(c > 0.0)) throw std::invalid_argument("ISS experiment needs an osL certificate with c > 0");
  if (!(ell >= 0.0)) throw std::invalid_argument("ISS experiment needs an input Lipschitz constant");
  if (!u_x || !u_y) throw std::invalid_argument("ISS experiment needs both input signals");
  const Trajectory x = integrate(model, 0.0, x0, T, h, u_x);
  const Trajectory y = integrate(model, 0.0, y0, T, h, u_y);
  const std::size_t n = std::min(x.size(), y.size());
  IssReport r{{}, {}, {}, -std::numeric_limits<double>::infinity(), 0.0, false,
              x.blowup_time ? x.blowup_time : y.blowup_time};
  const double d0 = norm(Eigen::VectorXd(x0 - y0), spec_x);
  double sup_u = 0.0;
  double max_bound = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = x.time(k);
    sup_u = std::max(sup_u, norm(Eigen::VectorXd(u_x(t) - u_y(t)), spec_u));
    if (k > 0) {
      const double tm = t - h / 2;
      sup_u = std::max(sup_u, norm(Eigen::VectorXd(u_x(tm) - u_y(tm)), spec_u));
    }
    const double decay = std::exp(-c * t);
    const double bound = decay * d0 + ell * (1.0 - decay) / c * sup_u;
    const double dist = norm(Eigen::VectorXd(x.states[k] - y.states[k]), spec_x);
    r.times.push_back(t);
    r.distance.push_back(dist);
    r.bound.push_back(bound);
    r.max_violation = std::max(r.max_violation, dist - bound);
    max_bound = std::max(max_bound, bound);
  }
  r.margin = tol + h * h * (1.0 + max_bound);
  r.pass = !r.blowup_time && r.max_violation <= r.margin;
  return r;
}

IssReport iss_equilibrium_experiment(const VectorFieldModel& model, const Signal& u_x,
                                     const Eigen::VectorXd& x0, const Eigen::VectorXd& x_star,
                                     const Eigen::VectorXd& u_star, double c, double ell,
                                     const NormSpec& spec_x, const NormSpec& spec_u, double T,
                                     double h, double tol) {
  for (double t : {0.0, T / 2, T}) {
    const double residual = model.eval(t, x_star, u_star).norm();
    if (!(residual <= 1e-8)) {
      throw std::invalid_argument("x* is not an equilibrium under u*: residual " +
                                  std::to_string(residual));
    }
  }
  const Signal u_y = [u_star](double) { return u_star; };
  return iss_experiment(model, u_x, u_y, x0, x_star, c, ell, spec_x, spec_u, T, h, tol);
}

GainReport measure_gain(const VectorFieldModel& model, double c, double ell, const NormSpec& spec_x,
                        const NormSpec& spec_u, double q, const std::vector<Signal>& probes, double T,
                        double h, const Eigen::VectorXd& x0) {
  if (!(c > 0.0)) throw std::invalid_argument("gain measurement needs c > 0");
  if (probes.empty()) throw std::invalid_argument("gain measurement needs at least one probe");
  const Eigen::VectorXd start = x0.size() == 0 ? Eigen::VectorXd::Zero(model.state_dim()) : x0;
  const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(model.input_dim());
  const Signal zero = [zero_u](double) { return zero_u; };
  const Trajectory y = integrate(model, 0.0, start, T, h, zero);
  GainReport report{0.0, ell / c, {}};
  for (const Signal& probe : probes) {
    const Trajectory x = integrate(model, 0.0, start, T, h, probe);
    if (x.blowup_time) throw std::runtime_error("probe trajectory blew up");
    std::vector<Eigen::VectorXd> diff(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = x.states[k] - y.states[k];
    const auto grid = x.times();
    const double nu = signal_norm(x.inputs, SignalNorm{q, spec_u, grid});
    if (!(nu > 0.0)) throw std::invalid_argument("probe input has zero norm");
    const double ratio = signal_norm(diff, SignalNorm{q, spec_x, grid}) / nu;
    report.ratios.push_back(ratio);
    report.measured = std::max(report.measured, ratio);
  }
  return report;
}

Eigen::VectorXd find_equilibrium(const VectorFieldModel& model, const NormSpec& spec,
                                 const Region& region, double T_max, double h, double tol) {
  require_dim(region.dim(), model.state_dim(), "region");
  Eigen::VectorXd x = region.center();
  double t = region.t0;
  double residual = norm(model.eval(t, x), spec);
  const double chunk = std::max(h, std::min(1.0, T_max));
  for (double elapsed = 0.0; residual > tol && elapsed < T_max; elapsed += chunk) {
    const Trajectory traj = integrate(model, t, x, chunk, h);
    for (std::size_t k = 1; k < traj.size(); ++k) {
      x = traj.states[k];
      residual = norm(model.eval(traj.time(k), x), spec);
      if (residual <= tol) return x;
    }
    if (traj.blowup_time) throw ConvergenceError("trajectory blew up while seeking equilibrium", residual);
    t = traj.final_time();
  }
  if (residual > tol) {
    throw ConvergenceError("no equilibrium within the horizon; residual " + std::to_string(residual),
                           residual);
  }
  return x;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
  const Index n = traj.states.empty() ? 0 : traj.states.front().size();
  const Index k = traj.inputs.empty() ? 0 : traj.inputs.front().size();
  os << 't';
  for (Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Index j = 0; j < k; ++j) os << ",u" << j + 1;
  os << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < traj.size(); ++r) {
    os << traj.time(r);
    for (Index i = 0; i < n; ++i) os << ',' << traj.states[r](i);
    for (Index j = 0; j < k; ++j) os << ',' << traj.inputs[r](j);
    os << '\n';
  }
}

}  // namespace contraction
