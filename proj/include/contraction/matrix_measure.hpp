#pragma once

// Matrix measures (logarithmic norms) mu_{p,R}(A) = mu_p(R A R^{-1}).
//
// Closed forms cover p in {1, 2, inf}. For other exponents the value is the
// supremum of [[A x, x]] over the unit sphere (Lumer's equality), found by
// projected gradient ascent with seeded restarts.

#include "contraction/pairing.hpp"

#include <cstdint>

namespace contraction {

enum class MeasureMethod { closed_form, optimized };

template <typename Scalar>
struct BasicMeasureResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar value;
  MeasureMethod method;
  Vector witness;  // unit vector in the original coordinates
  Scalar gap_estimate = Scalar(0);
};

using MeasureResult = BasicMeasureResult<double>;

struct MeasureOptions {
  int restarts = 32;
  int max_iterations = 500;
  double initial_step = 1e-2;
  std::uint64_t seed = 0;
};

namespace detail {

template <typename Scalar>
using DynMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DynVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
DynMatrix<Scalar> similarity(const DynMatrix<Scalar>& A, const BasicNormSpec<Scalar>& spec) {
  if (spec.is_identity()) return A;
  return spec.weight() * A * spec.weight_inverse();
}

// Offset (1 - delta) e_j + delta * s spread over the other coordinates, l1-normalized.
template <typename Scalar>
DynVector<Scalar> l1_column_point(const DynMatrix<Scalar>& B, Index j, Scalar delta) {
  const Index n = B.rows();
  DynVector<Scalar> z = DynVector<Scalar>::Zero(n);
  z(j) = Scalar(1) - (n > 1 ? delta : Scalar(0));
  for (Index i = 0; i < n; ++i) {
    if (i == j) continue;
    z(i) = (B(i, j) < Scalar(0) ? Scalar(-1) : Scalar(1)) * delta / Scalar(n - 1);
  }
  return z;
}

// Cube vertex aligned with row i: z_i = 1, z_j = sign(b_ij) scaled by (1 - eta).
template <typename Scalar>
DynVector<Scalar> linf_row_point(const DynMatrix<Scalar>& B, Index i, Scalar eta) {
  const Index n = B.rows();
  DynVector<Scalar> z(n);
  for (Index j = 0; j < n; ++j) {
    z(j) = j == i ? Scalar(1) : (B(i, j) < Scalar(0) ? Scalar(-1) : Scalar(1)) * (Scalar(1) - eta);
  }
  return z;
}

template <typename Scalar>
BasicMeasureResult<Scalar> closed_form_l1(const DynMatrix<Scalar>& B,
                                          const BasicNormSpec<Scalar>& spec) {
  Index best = 0;
  Scalar value = -std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < B.cols(); ++j) {
    const Scalar col = B(j, j) + B.col(j).cwiseAbs().sum() - std::abs(B(j, j));
    if (col > value) {
      value = col;
      best = j;
    }
  }
  DynVector<Scalar> z = l1_column_point(B, best, Scalar(1e-12));
  DynVector<Scalar> w = spec.weight_inverse() * z;
  w /= norm(w, spec);
  return {value, MeasureMethod::closed_form, w, Scalar(0)};
}

template <typename Scalar>
BasicMeasureResult<Scalar> closed_form_linf(const DynMatrix<Scalar>& B,
                                            const BasicNormSpec<Scalar>& spec) {
  Index best = 0;
  Scalar value = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < B.rows(); ++i) {
    const Scalar row = B(i, i) + B.row(i).cwiseAbs().sum() - std::abs(B(i, i));
    if (row > value) {
      value = row;
      best = i;
    }
  }
  DynVector<Scalar> w = spec.weight_inverse() * linf_row_point(B, best, Scalar(0));
  w /= norm(w, spec);
  return {value, MeasureMethod::closed_form, w, Scalar(0)};
}

template <typename Scalar>
BasicMeasureResult<Scalar> closed_form_l2(const DynMatrix<Scalar>& B,
                                          const BasicNormSpec<Scalar>& spec) {
  const DynMatrix<Scalar> sym = (B + B.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<DynMatrix<Scalar>> eig(sym);
  const Index top = sym.rows() - 1;
  DynVector<Scalar> w = spec.weight_inverse() * eig.eigenvectors().col(top);
  w /= norm(w, spec);
  return {eig.eigenvalues()(top), MeasureMethod::closed_form, w, Scalar(0)};
}

// [[B z, z]] / ||z||^2 in weighted coordinates for the spec's canonical pairing.
template <typename Scalar>
Scalar lumer_ratio(const DynMatrix<Scalar>& B, const DynVector<Scalar>& z, Scalar p) {
  const DynVector<Scalar> bz = B * z;
  Scalar value;
  if (p == Scalar(1)) {
    value = sign_pairing<Scalar>(bz, z);
  } else if (std::isinf(static_cast<double>(p))) {
    value = max_pairing<Scalar>(bz, z);
  } else {
    value = gateaux<Scalar>(bz, z, p);
  }
  const Scalar nz = lp_norm(z, p);
  return value / (nz * nz);
}

// Ascent direction of z -> (z o |z|^{p-2})^T B z / ||z||_p^p at ||z||_p = 1.
template <typename Scalar>
DynVector<Scalar> lumer_gradient(const DynMatrix<Scalar>& B, const DynVector<Scalar>& z, Scalar p,
                                 Scalar value) {
  using std::abs;
  using std::pow;
  const Index n = z.size();
  DynVector<Scalar> phi(n);
  DynVector<Scalar> curv(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar a = abs(z(i));
    phi(i) = a == Scalar(0) ? Scalar(0) : sign(z(i)) * pow(a, p - Scalar(1));
    curv(i) = a == Scalar(0) ? Scalar(0) : pow(a, p - Scalar(2));
  }
  const DynVector<Scalar> bz = B * z;
  return (p - Scalar(1)) * curv.cwiseProduct(bz) + B.transpose() * phi - p * value * phi;
}

template <typename Scalar>
void project_to_sphere(DynVector<Scalar>& z, Scalar p) {
  z /= lp_norm(z, p);
}

template <typename Scalar>
std::vector<DynVector<Scalar>> structured_starts(const DynMatrix<Scalar>& B, Scalar p) {
  std::vector<DynVector<Scalar>> starts;
  const Index n = B.rows();
  if (p == Scalar(1)) {
    for (Index j = 0; j < n; ++j) starts.push_back(l1_column_point(B, j, Scalar(1e-12)));
  } else if (std::isinf(static_cast<double>(p))) {
    for (Index i = 0; i < n; ++i) starts.push_back(linf_row_point(B, i, Scalar(0)));
  } else if (p < Scalar(2)) {
    for (Index j = 0; j < n; ++j) {
      for (Scalar d : {Scalar(1e-1), Scalar(1e-2), Scalar(1e-3)}) {
        starts.push_back(l1_column_point(B, j, d));
      }
    }
  } else if (p > Scalar(2)) {
    for (Index i = 0; i < n; ++i) {
      for (Scalar e : {Scalar(1e-1), Scalar(1e-2), Scalar(1e-3)}) {
        starts.push_back(linf_row_point(B, i, e));
      }
    }
  }
  for (auto& z : starts) project_to_sphere(z, p);
  return starts;
}

// Local ascent from z on the unit sphere; returns the final objective value.
template <typename Scalar>
Scalar ascend(const DynMatrix<Scalar>& B, DynVector<Scalar>& z, Scalar p,
              const MeasureOptions& options) {
  Scalar value = lumer_ratio(B, z, p);
  if (p == Scalar(1) || std::isinf(static_cast<double>(p))) {
    // Nonsmooth spheres: the supremum sits at (or next to) vertices; try the
    // vertex candidates adjacent to the current point.
    for (const auto& cand : structured_starts(B, p)) {
      const Scalar v = lumer_ratio(B, cand, p);
      if (v > value) {
        value = v;
        z = cand;
      }
    }
    return value;
  }
  Scalar step = Scalar(options.initial_step);
  for (int it = 0; it < options.max_iterations; ++it) {
    DynVector<Scalar> g = lumer_gradient(B, z, p, value);
    const Scalar gn = g.norm();
    if (!(gn > Scalar(1e-14))) break;
    g /= gn;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      DynVector<Scalar> cand = z + step * g;
      project_to_sphere(cand, p);
      const Scalar v = lumer_ratio(B, cand, p);
      if (v > value) {
        const Scalar gain = v - value;
        z = std::move(cand);
        value = v;
        improved = true;
        step = std::min(Scalar(1), step * Scalar(1.5));
        if (gain < Scalar(1e-15) * std::max(Scalar(1), std::abs(value))) it = options.max_iterations;
        break;
      }
      step /= Scalar(2);
    }
    if (!improved) break;
  }
  return value;
}

}  // namespace detail

/// Supremum of [[A x, x]] / ||x||^2 over the unit sphere of `spec` with its canonical pairing.
template <typename Scalar>
BasicMeasureResult<Scalar> optimized_measure(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
    const BasicNormSpec<Scalar>& spec, const MeasureOptions& options = {}) {
  using Vector = detail::DynVector<Scalar>;
  if (A.rows() != A.cols()) throw DimensionError("matrix measure requires a square matrix");
  require_dim(A.rows(), spec.dim(), "matrix measure");
  const auto B = detail::similarity(A, spec);
  const Scalar p = spec.p();
  // Unweighted sphere samples serve as random starts in R x coordinates.
  const auto random_starts =
      sample_unit_sphere(BasicNormSpec<Scalar>::unweighted(p, A.rows()),
                         std::max(1, options.restarts), options.seed);
  std::vector<Vector> starts = detail::structured_starts(B, p);
  starts.insert(starts.end(), random_starts.begin(), random_starts.end());

  Scalar best = -std::numeric_limits<Scalar>::infinity();
  Scalar worst_random = std::numeric_limits<Scalar>::infinity();
  Vector best_z;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    Vector z = starts[r];
    const Scalar v = detail::ascend(B, z, p, options);
    if (v > best) {
      best = v;
      best_z = z;
    }
    if (r + random_starts.size() >= starts.size()) worst_random = std::min(worst_random, v);
  }
  Vector w = spec.is_identity() ? best_z : Vector(spec.weight_inverse() * best_z);
  w /= norm(w, spec);
  return {best, MeasureMethod::optimized, w, std::max(Scalar(0), best - worst_random)};
}

template <typename Scalar>
BasicMeasureResult<Scalar> matrix_measure(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
    const BasicNormSpec<Scalar>& spec, const MeasureOptions& options = {}) {
  if (A.rows() != A.cols()) throw DimensionError("matrix measure requires a square matrix");
  require_dim(A.rows(), spec.dim(), "matrix measure");
  const auto B = detail::similarity(A, spec);
  if (spec.is_l1()) return detail::closed_form_l1(B, spec);
  if (spec.is_linf()) return detail::closed_form_linf(B, spec);
  if (spec.is_l2()) return detail::closed_form_l2(B, spec);
  return optimized_measure(A, spec, options);
}

/// Best [[A x, x]] over `samples` seeded unit vectors; a lower bound for mu(A).
template <typename Scalar>
Scalar measure_lower_bound_sampling(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                    const BasicNormSpec<Scalar>& spec, const PairingKind& kind,
                                    int samples, std::uint64_t seed) {
  require_dim(A.rows(), spec.dim(), "matrix measure sampling");
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& x : sample_unit_sphere(spec, samples, seed)) {
    const detail::DynVector<Scalar> ax = A * x;
    best = std::max(best, weak_pairing(ax, x, spec, kind));
  }
  return best;
}

struct MeasurePropertiesReport {
  double shift_residual;        // |mu(A + cI) - mu(A) - c|
  double scaling_residual;      // |mu(alpha A) - alpha mu(A)|
  double subadditivity_excess;  // mu(A + B) - mu(A) - mu(B), should be <= 0
  double spectral_excess;       // max Re(lambda(A)) - mu(A), should be <= 0
  bool shift_ok;
  bool scaling_ok;
  bool subadditive_ok;
  bool spectral_ok;
  bool all_ok() const { return shift_ok && scaling_ok && subadditive_ok && spectral_ok; }
};

MeasurePropertiesReport measure_properties_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                                 double c, double alpha, const NormSpec& spec,
                                                 double tol = 1e-8);

}  // namespace contraction
