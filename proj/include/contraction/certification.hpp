#pragma once

// Sample-based checks of the pointwise contraction conditions: measure-bounded
// Jacobian, Demidovich, one-sided Lipschitz and equilibrium contraction.
//
// Every bound is an empirical supremum over a deterministic sample design and
// therefore a lower bound on the true supremum over the region. Forward
// invariance of the region is assumed, not checked.

#include "contraction/matrix_measure.hpp"
#include "contraction/sampling.hpp"
#include "contraction/vector_field.hpp"

#include <optional>

namespace contraction {

enum class Condition {
  jacobian_measure,
  factored_measure,
  demidovich,
  one_sided_lipschitz,
  equilibrium,
};

const char* to_string(Condition c);

struct SamplingOptions {
  int state_samples = 10000;
  int direction_samples = 16;
  int pair_samples = 10000;
  int time_samples = 16;
  int polish_top = 16;  // best candidates refined and re-examined along measure witnesses
  double near_pair_epsilon = 1e-4;
  std::uint64_t seed = 0;
  int threads = 1;
  MeasureOptions measure{};
};

/// The sample attaining the reported supremum. `aux` is the direction v
/// (Demidovich) or the second point y (one-sided Lipschitz); empty otherwise.
struct Witness {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd aux;
};

struct ContractionCertificate {
  Condition condition;
  double bound_b;
  NormSpec spec;
  PairingKind kind;
  Region region;
  int samples;
  Witness worst_witness;
  std::optional<Eigen::VectorXd> x_star;
  std::vector<std::string> kink_surfaces;  // recorded, not covered by the sampling

  bool contracting() const { return bound_b < 0.0; }
};

/// A norm together with a compatible weak pairing, possibly of aggregate or semi-norm type.
struct Geometry {
  std::function<double(const Eigen::VectorXd&)> norm;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> pairing;

  static Geometry of(const NormSpec& spec, const PairingKind& kind);
};

struct PairSample {
  double t;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct SupEstimate {
  double value;
  Witness witness;
  int samples;
};

/// Maps (t, x) to directions worth probing with near pairs; may return nothing.
using DirectionOracle = std::function<std::vector<Eigen::VectorXd>(double, const Eigen::VectorXd&)>;

class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class NoGuaranteeError : public std::runtime_error {
 public:
  NoGuaranteeError(const std::string& what, double gap) : std::runtime_error(what), gap_(gap) {}
  /// d - c >= 0: how far the perturbation rate exceeds the nominal contraction rate.
  double gap() const { return gap_; }

 private:
  double gap_;
};

/// Short-ascent options for sweeps over many states; unchanged when a closed form exists.
MeasureOptions screening_options(const NormSpec& spec, MeasureOptions options);

/// Sample times and states over a region; autonomous models use t0 only.
std::vector<std::pair<double, Eigen::VectorXd>> sample_time_states(const VectorFieldModel& model,
                                                                   const Region& region, int count,
                                                                   const SamplingOptions& options,
                                                                   std::uint64_t seed);

/// Near-pair directions along which the pairing ratio of Df(t, x) is largest.
std::vector<Eigen::VectorXd> measure_witness_directions(const Eigen::MatrixXd& J, const NormSpec& spec,
                                                        const MeasureOptions& options = {});

ContractionCertificate sup_jacobian_measure(const VectorFieldModel& model, const NormSpec& spec,
                                            const Region& region, const SamplingOptions& options = {});
ContractionCertificate sup_jacobian_measure(const VectorFieldModel& model, const NormSpec& spec,
                                            const Region& region, int samples, std::uint64_t seed);

/// sup mu(A(t, x)) for models with a factorization f = A(t, x)(x - x*).
ContractionCertificate factored_measure(const VectorFieldModel& model, const NormSpec& spec,
                                        const Region& region, const SamplingOptions& options = {});

ContractionCertificate sup_demidovich(const VectorFieldModel& model, const NormSpec& spec,
                                      const PairingKind& kind, const Region& region,
                                      const SamplingOptions& options = {});
ContractionCertificate sup_demidovich(const VectorFieldModel& model, const NormSpec& spec,
                                      const PairingKind& kind, const Region& region,
                                      int state_samples, int direction_samples, std::uint64_t seed);

/// Ranks states for re-probing, typically a cheap Jacobian measure.
using StateScore = std::function<double(double, const Eigen::VectorXd&)>;

/// Random far pairs plus near pairs y = x + eps v. The best near pairs are
/// re-probed along the directions returned by `oracle`; with a `score`, so are
/// the best-scoring states of the state sweep after a compass search.
std::vector<PairSample> generate_osl_pairs(const VectorFieldModel& model, const Geometry& geometry,
                                           const Region& region, const SamplingOptions& options,
                                           const DirectionOracle& oracle,
                                           const std::vector<Eigen::VectorXd>& directions,
                                           const StateScore& score = {});

/// sup over pairs of [[f(t,x) - f(t,y), x - y]] / ||x - y||^2.
SupEstimate osl_over_pairs(const VectorFieldModel& model, const Geometry& geometry,
                           const std::vector<PairSample>& pairs, int threads = 1);

ContractionCertificate estimate_osL(const VectorFieldModel& model, const NormSpec& spec,
                                    const PairingKind& kind, const Region& region,
                                    const SamplingOptions& options = {});
ContractionCertificate estimate_osL(const VectorFieldModel& model, const NormSpec& spec,
                                    const PairingKind& kind, const Region& region, int pair_samples,
                                    std::uint64_t seed);

ContractionCertificate check_equilibrium_contraction(const VectorFieldModel& model,
                                                     const Eigen::VectorXd& x_star,
                                                     const NormSpec& spec, const PairingKind& kind,
                                                     const Region& region,
                                                     const SamplingOptions& options = {});

/// Recompute the certified quantity at the certificate's witness.
double reevaluate(const ContractionCertificate& cert, const VectorFieldModel& model,
                  const MeasureOptions& options = {});

struct PerturbationBound {
  double rate;         // c - d
  double shift_bound;  // ||g(x*)|| / (c - d)
};

/// Contraction of f + g from osL(f) <= -c < 0 and osL(g) <= d < c.
PerturbationBound compose_perturbation(const ContractionCertificate& cert_f,
                                       const ContractionCertificate& cert_g, double g_at_xstar_norm);

struct OslAlgebraReport {
  double osl_f;
  double osl_g;
  double osl_shifted;  // f + cI
  double osl_scaled;   // alpha f
  double osl_sum;      // f + g
  double lipschitz_f;  // sup ||f(x) - f(y)|| / ||x - y|| on the same pairs
  bool shift_ok;
  bool scaling_ok;
  bool subadditive_ok;
  bool lipschitz_ok;
  bool all_ok() const { return shift_ok && scaling_ok && subadditive_ok && lipschitz_ok; }
};

/// osL algebra on matched sample pairs (the union of every model's pair design).
OslAlgebraReport osl_algebra_check(const VectorFieldModel& f, const VectorFieldModel& g, double c,
                                   double alpha, const NormSpec& spec, const PairingKind& kind,
                                   const Region& region, const SamplingOptions& options = {},
                                   double tol = 1e-8);

/// Operator norm of M from `from` to `to` when a closed form exists (equal p in {1, 2, inf}).
std::optional<double> induced_norm(const Eigen::MatrixXd& M, const NormSpec& from, const NormSpec& to);

/// sup ||f(t,x,u) - f(t,x,v)||_X / ||u - v||_U over sampled states and inputs.
double estimate_input_lipschitz(const VectorFieldModel& model, const NormSpec& spec_x,
                                const NormSpec& spec_u, const Region& region,
                                const Region& input_region, const SamplingOptions& options = {});

// Field algebra used by the osL checks and perturbation experiments.
VectorFieldModel add_fields(const VectorFieldModel& f, const VectorFieldModel& g);
VectorFieldModel scale_field(const VectorFieldModel& f, double alpha);
VectorFieldModel shift_field(const VectorFieldModel& f, double c);  // f + c x
VectorFieldModel offset_field(const VectorFieldModel& f, const Eigen::VectorXd& b);  // f + b

}  // namespace contraction
