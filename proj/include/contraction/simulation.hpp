#pragma once

// Fixed-step RK4 integration and trajectory-level checks of the contraction
// consequences: exponential envelopes, Dini decay, Coppel's inequality, ISS
// bounds and incremental gains.

#include "contraction/norm.hpp"
#include "contraction/sampling.hpp"
#include "contraction/vector_field.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace contraction {

using Signal = std::function<Eigen::VectorXd(double)>;
using Rhs = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
/// Distance of a difference vector: a norm, a semi-norm or an aggregate norm.
using Distance = std::function<double(const Eigen::VectorXd&)>;
/// True when the active index set of the distance changes between two differences.
using KinkDetector = std::function<bool(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct Trajectory {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;  // empty without an input signal
  std::optional<double> blowup_time;

  std::size_t size() const { return states.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
  double final_time() const { return time(states.size() - 1); }
  std::vector<double> times() const;
};

Trajectory integrate(const Rhs& rhs, double t0, const Eigen::VectorXd& x0, double T, double h);
Trajectory integrate(const VectorFieldModel& model, double t0, const Eigen::VectorXd& x0, double T,
                     double h, const Signal& u = {});

/// A trajectory sitting at x on the grid of `like`.
Trajectory constant_trajectory(const Trajectory& like, const Eigen::VectorXd& x);

Distance distance_of(const NormSpec& spec);
KinkDetector kink_detector_of(const NormSpec& spec);

struct EnvelopeReport {
  double b;
  double max_violation;
  bool pass;
  std::size_t worst_s;
  std::size_t worst_t;
  std::size_t pairs_checked;
};

/// max over grid pairs s <= t of d(t) - e^{b(t-s)} d(s) with d = distance(x - y).
/// Every pair is covered in one pass via a running minimum of log d(s) - b s.
EnvelopeReport envelope_check(const Trajectory& x, const Trajectory& y, const Distance& distance,
                              double b, double tol);
EnvelopeReport envelope_check(const Trajectory& x, const Trajectory& y, const NormSpec& spec,
                              double b, double tol);

struct DiniReport {
  std::size_t points;
  std::size_t excluded;  // kink points
  std::size_t passing;
  double worst_excess;   // max of D+ d - rhs - margin over the checked points
  double margin;
  double fraction() const;
  bool pass() const { return fraction() >= 0.99; }
};

/// Forward differences of d = distance(x - y) checked against b d + tol + L h.
DiniReport dini_decay_check(const Trajectory& x, const Trajectory& y, const Distance& distance,
                            const KinkDetector& kinks, double b, double tol);
DiniReport dini_decay_check(const Trajectory& x, const Trajectory& y, const NormSpec& spec, double b,
                            double tol);

using MatrixMap = std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)>;
using MeasureFn = std::function<double(const Eigen::MatrixXd&)>;

/// D+ ||x(t)|| <= mu(A(t, x(t))) ||x(t)|| along a trajectory of x' = A(t, x) x.
DiniReport coppel_check(const MatrixMap& A, const Trajectory& traj, const Distance& distance,
                        const MeasureFn& measure, const KinkDetector& kinks, double tol);
DiniReport coppel_check(const MatrixMap& A, const Trajectory& traj, const NormSpec& spec,
                        double tol = 1e-8);

/// phi(a) e^{M} + int r e^{M(t) - M(s)} ds on the grid (trapezoid), M the running integral of m.
std::vector<double> gronwall_bound(double phi0, const std::vector<double>& m,
                                   const std::vector<double>& r, double h);

struct IssReport {
  std::vector<double> times;
  std::vector<double> distance;
  std::vector<double> bound;
  double max_violation;
  double margin;
  bool pass;
  std::optional<double> blowup_time;
};

/// Simulates both trajectories and checks
/// ||x - y||(t) <= e^{-ct} ||x0 - y0|| + l (1 - e^{-ct}) / c sup_{s <= t} ||u_x - u_y||.
IssReport iss_experiment(const VectorFieldModel& model, const Signal& u_x, const Signal& u_y,
                         const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, double c, double ell,
                         const NormSpec& spec_x, const NormSpec& spec_u, double T, double h,
                         double tol = 1e-6);

/// Equilibrium variant: y is the equilibrium x* under the constant input u*.
IssReport iss_equilibrium_experiment(const VectorFieldModel& model, const Signal& u_x,
                                     const Eigen::VectorXd& x0, const Eigen::VectorXd& x_star,
                                     const Eigen::VectorXd& u_star, double c, double ell,
                                     const NormSpec& spec_x, const NormSpec& spec_u, double T,
                                     double h, double tol = 1e-6);

struct GainReport {
  double measured;
  double bound;                // l / c
  std::vector<double> ratios;  // per probe
};

/// max over probes of ||x - y||_q / ||u||_q with x driven by the probe and y by zero input.
GainReport measure_gain(const VectorFieldModel& model, double c, double ell, const NormSpec& spec_x,
                        const NormSpec& spec_u, double q, const std::vector<Signal>& probes, double T,
                        double h, const Eigen::VectorXd& x0 = Eigen::VectorXd());

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Integrates from the region center until ||f(t, x)|| <= tol.
Eigen::VectorXd find_equilibrium(const VectorFieldModel& model, const NormSpec& spec,
                                 const Region& region, double T_max = 200.0, double h = 1e-3,
                                 double tol = 1e-10);

/// CSV with header t,x1..xn[,u1..uk] and 17 significant digits.
void write_csv(std::ostream& os, const Trajectory& traj);

}  // namespace contraction
