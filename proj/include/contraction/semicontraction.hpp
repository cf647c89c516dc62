#pragma once

// Semi-norms |||v||| = ||P v||, matrix semi-measures, and semi- and subspace
// contraction certificates.

#include "contraction/certification.hpp"
#include "contraction/simulation.hpp"

namespace contraction {

/// Full-row-rank projector P (m x n) with a norm on its m-dimensional image.
class SemiNormSpec {
 public:
  SemiNormSpec(Eigen::MatrixXd projector, NormSpec base);

  /// Rows form an orthonormal basis of the complement of the all-ones vector.
  static SemiNormSpec consensus(int n, double p = 2.0);

  const Eigen::MatrixXd& projector() const { return P_; }
  const NormSpec& base() const { return base_; }
  int rows() const { return static_cast<int>(P_.rows()); }
  int cols() const { return static_cast<int>(P_.cols()); }
  /// Orthonormal basis of ker P (n x (n - m)).
  const Eigen::MatrixXd& kernel_basis() const { return K_; }
  /// Minimum-norm right inverse P^T (P P^T)^{-1}.
  const Eigen::MatrixXd& right_inverse() const { return P_plus_; }

 private:
  Eigen::MatrixXd P_;
  NormSpec base_;
  Eigen::MatrixXd K_;
  Eigen::MatrixXd P_plus_;
};

double semi_norm(const Eigen::VectorXd& x, const SemiNormSpec& s);
Distance semi_distance(const SemiNormSpec& s);
/// norm |||.||| with pairing [[P x, P y]].
Geometry semi_geometry(const SemiNormSpec& s, const PairingKind& kind);

struct KernelInvariance {
  bool invariant;
  double residual;   // max_k ||P A K e_k||_2
  double threshold;  // 1e-9 (1 + ||A||_inf)
};

KernelInvariance kernel_invariance(const Eigen::MatrixXd& A, const SemiNormSpec& s);

class KernelInvarianceError : public std::runtime_error {
 public:
  KernelInvarianceError(const std::string& what, double residual, Witness witness = {})
      : std::runtime_error(what), residual_(residual), witness_(std::move(witness)) {}
  double residual() const { return residual_; }
  const Witness& witness() const { return witness_; }

 private:
  double residual_;
  Witness witness_;
};

struct SemiMeasureResult {
  double value;
  bool kernel_invariant;
  double sampled;           // sup of [[P A x, P x]] / |||x|||^2 over sampled x = P^+ z
  Eigen::MatrixXd reduced;  // P A P^+
};

/// Measure of the reduced matrix P A P^+; throws KernelInvarianceError when
/// A does not map ker P into itself. `samples` > 0 adds the sampled cross-check.
SemiMeasureResult semi_measure(const Eigen::MatrixXd& A, const SemiNormSpec& s, int samples = 0,
                               std::uint64_t seed = 0, const MeasureOptions& options = {});

struct SemiCertificate {
  double bound_b;  // sup of the semi-measure of Df
  Witness measure_witness;
  double osl_bound;  // sup of [[P(f(x) - f(y)), P(x - y)]] / |||x - y|||^2
  Witness osl_witness;
  int samples;
  std::vector<std::string> kink_surfaces;

  bool contracting() const { return bound_b < 0.0; }
};

SemiCertificate certify_semicontraction(const VectorFieldModel& model, const SemiNormSpec& s,
                                        const PairingKind& kind, const Region& region,
                                        const SamplingOptions& options = {});

struct SubspaceCertificate {
  double bound_b;  // sup [[P f(t, x), P(x - x*)]] / |||x - x*|||^2
  Witness witness;
  Eigen::VectorXd x_star;
  double hypothesis_residual;  // max |||f(t, x* + k)||| over sampled kernel vectors k
  int samples;

  bool contracting() const { return bound_b < 0.0; }
};

class HypothesisError : public std::runtime_error {
 public:
  HypothesisError(const std::string& what, Eigen::VectorXd kernel_vector)
      : std::runtime_error(what), kernel_vector_(std::move(kernel_vector)) {}
  const Eigen::VectorXd& kernel_vector() const { return kernel_vector_; }

 private:
  Eigen::VectorXd kernel_vector_;
};

/// Requires f(t, x* + ker P) in ker P (checked on samples to 1e-8).
SubspaceCertificate certify_subspace_contraction(const VectorFieldModel& model,
                                                 const Eigen::VectorXd& x_star, const SemiNormSpec& s,
                                                 const PairingKind& kind, const Region& region,
                                                 const SamplingOptions& options = {});

}  // namespace contraction
