#pragma once

// Network certificates from per-subsystem contraction rates and cross gains:
// the Metzler gain matrix, its Perron-based diagonal weights and the
// xi-weighted aggregate norm.

#include "contraction/certification.hpp"
#include "contraction/simulation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace contraction {

bool is_metzler(const Eigen::MatrixXd& M);
/// Strong connectivity of the graph with an edge i -> j whenever M(i, j) > 0, i != j.
bool is_irreducible(const Eigen::MatrixXd& M);

/// Largest real part of the eigenvalues of a Metzler matrix.
double spectral_abscissa(const Eigen::MatrixXd& M);

struct PerronPair {
  double alpha;
  Eigen::VectorXd right;  // M v = alpha v, v > 0
  Eigen::VectorXd left;   // M^T u = alpha u, u > 0
};

/// Power iteration on M - beta I (beta below the smallest diagonal entry),
/// polished by inverse iteration. M must be irreducible Metzler.
PerronPair perron_vectors(const Eigen::MatrixXd& M);

/// lambda_max(diag(xi) M + M^T diag(xi) - 2 level diag(xi)).
double lmi_residual(const Eigen::MatrixXd& M, const Eigen::VectorXd& xi, double level);

struct DiagonalWeights {
  Eigen::VectorXd xi;  // min xi = 1
  double epsilon;
  double alpha;
  double lmi_max_eig;  // at level alpha + epsilon, on the original matrix
  double delta;        // off-diagonal perturbation used for reducible matrices (0 otherwise)
};

class LmiError : public std::runtime_error {
 public:
  LmiError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

DiagonalWeights diagonal_weights(const Eigen::MatrixXd& M, double epsilon = 0.0);

/// Contiguous blocks of a stacked state vector.
struct BlockLayout {
  std::vector<int> dims;

  int total() const;
  int offset(std::size_t block) const;
  std::vector<Eigen::VectorXd> split(const Eigen::VectorXd& x) const;
};

/// sqrt(sum_i xi_i ||x_i||_i^2).
double aggregate_norm(const std::vector<Eigen::VectorXd>& x_blocks, const Eigen::VectorXd& xi,
                      const std::vector<NormSpec>& norms);
/// sum_i xi_i [[x_i, y_i]]_i.
double aggregate_pairing(const std::vector<Eigen::VectorXd>& x_blocks,
                         const std::vector<Eigen::VectorXd>& y_blocks, const Eigen::VectorXd& xi,
                         const std::vector<NormSpec>& norms, const std::vector<PairingKind>& pairings);

Geometry aggregate_geometry(const BlockLayout& layout, const Eigen::VectorXd& xi,
                            const std::vector<NormSpec>& norms,
                            const std::vector<PairingKind>& pairings);

/// Block i of a network: x_i' = f_i(t, x, u_i), written over the global state
/// x1..xN and the local inputs u1..u{k_i}.
struct SubsystemSpec {
  std::string name;
  int dim = 0;
  int inputs = 0;
  std::vector<Expr> components;
  std::optional<double> self_rate;                 // c_i > 0
  std::optional<std::vector<double>> cross_gains;  // gamma_ij; entry i is ignored
  NormSpec norm;
  PairingKind pairing;
};

struct GainMatrix {
  Eigen::MatrixXd gamma;
  double alpha;
  bool irreducible;
};

GainMatrix gain_matrix(const Eigen::VectorXd& rates, const Eigen::MatrixXd& cross_gains);

struct NetworkCertificate {
  GainMatrix gain;
  bool certified;
  double epsilon;  // 0 when the gain matrix is irreducible
  double rate;     // |alpha + epsilon| when certified
  std::optional<DiagonalWeights> weights;
  VectorFieldModel network;
  BlockLayout layout;
  std::vector<NormSpec> norms;
  std::vector<PairingKind> pairings;
  bool estimated;  // some c_i or gamma_ij came from sampling

  Distance distance() const;
  Geometry geometry() const;
};

/// Assemble x' = (f_1, ..., f_n) with block inputs stacked in order.
VectorFieldModel assemble_network(const std::vector<SubsystemSpec>& subsystems);

/// -sup of the block osL with the other blocks frozen, over sampled pairs.
double estimate_self_rate(const std::vector<SubsystemSpec>& subsystems, std::size_t i,
                          const Region& region, const SamplingOptions& options = {});
/// sup ||f_i(x) - f_i(y)||_i / ||x_j - y_j||_j over pairs differing only in block j.
double estimate_cross_gain(const std::vector<SubsystemSpec>& subsystems, std::size_t i, std::size_t j,
                           const Region& region, const SamplingOptions& options = {});

/// Declared c_i, gamma_ij are used as given; missing ones are estimated over `region`.
NetworkCertificate certify_network(const std::vector<SubsystemSpec>& subsystems, double epsilon,
                                   const std::optional<Region>& region = std::nullopt,
                                   const SamplingOptions& options = {});

}  // namespace contraction
