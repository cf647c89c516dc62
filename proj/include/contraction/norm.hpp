#pragma once

// Weighted lp norms ||x||_{p,R} = ||R x||_p, index sets, unit-sphere sampling
// and signal (time-function) norms.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace contraction {

using Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dim(Index got, Index expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

template <typename Scalar>
class BasicNormSpec {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Unweighted lp norm on R^n.
  static BasicNormSpec unweighted(Scalar p, Index n) {
    if (n <= 0) throw std::invalid_argument("norm dimension must be positive");
    BasicNormSpec spec(p);
    spec.weight_ = Matrix::Identity(n, n);
    spec.weight_inv_ = Matrix::Identity(n, n);
    spec.identity_ = true;
    return spec;
  }

  /// ||x||_{p,R} = ||R x||_p for an invertible R.
  static BasicNormSpec weighted(Scalar p, const Matrix& R) {
    if (R.rows() != R.cols() || R.rows() == 0) {
      throw DimensionError("norm weight must be a nonempty square matrix");
    }
    Eigen::JacobiSVD<Matrix> svd(R);
    const auto& s = svd.singularValues();
    const Scalar tiny = std::numeric_limits<Scalar>::epsilon() * Scalar(R.rows()) * s(0);
    if (!(s(s.size() - 1) > tiny) || !std::isfinite(static_cast<double>(s(0)))) {
      throw std::invalid_argument("norm weight is singular or not finite");
    }
    BasicNormSpec spec(p);
    spec.weight_ = R;
    spec.weight_inv_ = R.inverse();
    spec.identity_ = R.isIdentity(Scalar(0));
    return spec;
  }

  /// Weighted l2 norm given by an SPD matrix P, ||x|| = sqrt(x^T P x); R = P^{1/2}.
  static BasicNormSpec from_spd(const Matrix& P) {
    if (P.rows() != P.cols() || P.rows() == 0) throw DimensionError("P must be square");
    const Scalar scale = std::max(Scalar(1), P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
      throw std::invalid_argument("P must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
    if (eig.eigenvalues().minCoeff() <= Scalar(0)) {
      throw std::invalid_argument("P must be positive definite");
    }
    const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
                        eig.eigenvectors().transpose();
    return weighted(Scalar(2), root);
  }

  Scalar p() const { return p_; }
  Index dim() const { return weight_.rows(); }
  const Matrix& weight() const { return weight_; }
  const Matrix& weight_inverse() const { return weight_inv_; }
  bool is_identity() const { return identity_; }
  bool is_l1() const { return p_ == Scalar(1); }
  bool is_linf() const { return std::isinf(static_cast<double>(p_)); }
  bool is_l2() const { return p_ == Scalar(2); }
  /// p in ]1, inf[, the norm is differentiable away from zero.
  bool is_smooth() const { return !is_l1() && !is_linf(); }

  template <typename Derived>
  Vector apply(const Eigen::MatrixBase<Derived>& x) const {
    require_dim(x.size(), dim(), "norm argument");
    if (identity_) return x;
    return weight_ * x;
  }

 private:
  explicit BasicNormSpec(Scalar p) : p_(p) {
    if (!(p >= Scalar(1))) throw std::invalid_argument("norm exponent p must lie in [1, inf]");
  }

  Scalar p_;
  Matrix weight_;
  Matrix weight_inv_;
  bool identity_ = false;
};

using NormSpec = BasicNormSpec<double>;

template <typename Scalar>
Scalar sign(Scalar v) {
  return Scalar((Scalar(0) < v) - (v < Scalar(0)));
}

/// Unweighted ||z||_p with overflow-safe scaling.
template <typename Derived>
typename Derived::Scalar lp_norm(const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::pow;
  if (z.size() == 0) return Scalar(0);
  const Scalar m = z.cwiseAbs().maxCoeff();
  if (std::isinf(static_cast<double>(p)) || m == Scalar(0)) return m;
  if (p == Scalar(1)) return z.cwiseAbs().sum();
  if (p == Scalar(2)) return z.norm();
  Scalar acc(0);
  for (Index i = 0; i < z.size(); ++i) acc += pow(abs(z(i)) / m, p);
  return m * pow(acc, Scalar(1) / p);
}

template <typename Derived>
typename Derived::Scalar norm(const Eigen::MatrixBase<Derived>& x,
                              const BasicNormSpec<typename Derived::Scalar>& spec) {
  return lp_norm(spec.apply(x), spec.p());
}

/// Indices i with |v_i| = ||v||_inf; every index when v = 0.
template <typename Derived>
std::vector<Index> inf_index_set(const Eigen::MatrixBase<Derived>& v) {
  std::vector<Index> out;
  if (v.size() == 0) return out;
  const auto m = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    using std::abs;
    if (abs(v(i)) == m) out.push_back(i);
  }
  return out;
}

/// Points on the unit sphere of `spec`. Sample k lies in sign orthant k mod 2^n of R x.
template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> sample_unit_sphere(
    const BasicNormSpec<Scalar>& spec, int count, std::uint64_t seed) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  const Index n = spec.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool orthants = n < 63;
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z(i) = Scalar(std::abs(normal(rng)));
    if (orthants) {
      const std::uint64_t pattern = static_cast<std::uint64_t>(k) % (std::uint64_t{1} << n);
      for (Index i = 0; i < n; ++i) {
        if ((pattern >> i) & 1U) z(i) = -z(i);
      }
    }
    z /= lp_norm(z, spec.p());
    Vector x = spec.is_identity() ? z : Vector(spec.weight_inverse() * z);
    x /= norm(x, spec);
    out.push_back(std::move(x));
  }
  return out;
}

template <typename Scalar>
struct BasicSignalNorm {
  Scalar q;
  BasicNormSpec<Scalar> space_norm;
  std::vector<Scalar> time_grid;
};

using SignalNorm = BasicSignalNorm<double>;

/// ||x(.)||_q over the grid: composite trapezoid of ||x(t)||^q for finite q, max for q = inf.
template <typename Scalar, typename VectorT>
Scalar signal_norm(const std::vector<VectorT>& samples, const BasicSignalNorm<Scalar>& sn) {
  using std::pow;
  if (sn.time_grid.size() < 2) throw std::invalid_argument("signal time grid needs >= 2 points");
  if (!(sn.q >= Scalar(1))) throw std::invalid_argument("signal exponent q must lie in [1, inf]");
  if (samples.size() != sn.time_grid.size()) {
    throw DimensionError("signal samples not aligned with time grid");
  }
  for (std::size_t k = 1; k < sn.time_grid.size(); ++k) {
    if (!(sn.time_grid[k] > sn.time_grid[k - 1])) {
      throw std::invalid_argument("signal time grid must be strictly increasing");
    }
  }
  std::vector<Scalar> values(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) values[k] = norm(samples[k], sn.space_norm);
  if (std::isinf(static_cast<double>(sn.q))) return *std::max_element(values.begin(), values.end());
  Scalar integral(0);
  for (std::size_t k = 1; k < values.size(); ++k) {
    const Scalar dt = sn.time_grid[k] - sn.time_grid[k - 1];
    integral += Scalar(0.5) * dt * (pow(values[k - 1], sn.q) + pow(values[k], sn.q));
  }
  return pow(integral, Scalar(1) / sn.q);
}

}  // namespace contraction
