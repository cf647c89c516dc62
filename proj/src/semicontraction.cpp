#include "contraction/semicontraction.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <random>

namespace contraction {

SemiNormSpec::SemiNormSpec(Eigen::MatrixXd projector, NormSpec base)
    : P_(std::move(projector)), base_(std::move(base)) {
  const Index m = P_.rows();
  const Index n = P_.cols();
  if (m == 0 || n == 0) throw DimensionError("projector must be nonempty");
  if (m > n) throw DimensionError("projector must have at most as many rows as columns");
  if (!P_.allFinite()) throw std::invalid_argument("projector has non-finite entries");
  require_dim(base_.dim(), m, "semi-norm base norm");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(P_, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(m - 1) > 1e-10 * sv(0))) throw std::invalid_argument("projector must have full row rank");
  K_ = svd.matrixV().rightCols(n - m);
  P_plus_ = P_.transpose() * (P_ * P_.transpose()).inverse();
}

SemiNormSpec SemiNormSpec::consensus(int n, double p) {
  if (n < 2) throw DimensionError("consensus projector needs n >= 2");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n - 1, n);
  for (int k = 1; k < n; ++k) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    P.row(k - 1).head(k).setConstant(scale);
    P(k - 1, k) = -k * scale;
  }
  return SemiNormSpec(std::move(P), NormSpec::unweighted(p, n - 1));
}

double semi_norm(const Eigen::VectorXd& x, const SemiNormSpec& s) {
  require_dim(x.size(), s.cols(), "semi-norm argument");
  return norm(Eigen::VectorXd(s.projector() * x), s.base());
}

Distance semi_distance(const SemiNormSpec& s) {
  return [s](const Eigen::VectorXd& x) { return semi_norm(x, s); };
}

Geometry semi_geometry(const SemiNormSpec& s, const PairingKind& kind) {
  if (!compatible(kind, s.base())) throw PairingError("pairing incompatible with the semi-norm base");
  return Geometry{[s](const Eigen::VectorXd& x) { return semi_norm(x, s); },
                  [s, kind](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
                    return weak_pairing(Eigen::VectorXd(s.projector() * x),
                                        Eigen::VectorXd(s.projector() * y), s.base(), kind);
                  }};
}

KernelInvariance kernel_invariance(const Eigen::MatrixXd& A, const SemiNormSpec& s) {
  if (A.rows() != s.cols() || A.cols() != s.cols()) throw DimensionError("matrix does not match projector");
  const double threshold = 1e-9 * (1.0 + A.cwiseAbs().rowwise().sum().maxCoeff());
  double residual = 0.0;
  if (s.kernel_basis().cols() > 0) {
    residual = (s.projector() * A * s.kernel_basis()).colwise().norm().maxCoeff();
  }
  return KernelInvariance{residual <= threshold, residual, threshold};
}

SemiMeasureResult semi_measure(const Eigen::MatrixXd& A, const SemiNormSpec& s, int samples,
                               std::uint64_t seed, const MeasureOptions& options) {
  const KernelInvariance inv = kernel_invariance(A, s);
  if (!inv.invariant) {
    throw KernelInvarianceError("A does not map ker P into itself (residual " +
                                    std::to_string(inv.residual) + ")",
                                inv.residual);
  }
  SemiMeasureResult r{0.0, true, -std::numeric_limits<double>::infinity(),
                      s.projector() * A * s.right_inverse()};
  r.value = matrix_measure(r.reduced, s.base(), options).value;
  if (samples > 0) {
    const PairingKind kind = default_pairing(s.base());
    for (const auto& z : sample_unit_sphere(s.base(), samples, seed)) {
      const Eigen::VectorXd x = s.right_inverse() * z;
      const Eigen::VectorXd Px = s.projector() * x;
      const double nx = norm(Px, s.base());
      r.sampled = std::max(r.sampled,
                           weak_pairing(Eigen::VectorXd(s.projector() * A * x), Px, s.base(), kind) /
                               (nx * nx));
    }
  }
  return r;
}

SemiCertificate certify_semicontraction(const VectorFieldModel& model, const SemiNormSpec& s,
                                        const PairingKind& kind, const Region& region,
                                        const SamplingOptions& options) {
  require_dim(s.cols(), model.state_dim(), "projector");
  require_dim(region.dim(), model.state_dim(), "region");
  const Geometry geometry = semi_geometry(s, kind);
  const auto pts = sample_time_states(model, region, options.state_samples, options, options.seed);

  std::vector<double> values(pts.size());
  std::vector<double> residuals(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const Eigen::MatrixXd J = model.eval_jacobian(pts[k].first, pts[k].second);
      const KernelInvariance inv = kernel_invariance(J, s);
      residuals[k] = inv.invariant ? 0.0 : inv.residual;
      values[k] = inv.invariant ? matrix_measure(Eigen::MatrixXd(s.projector() * J * s.right_inverse()),
                                                 s.base(), options.measure)
                                      .value
                                : std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (residuals[k] > 0.0) {
      throw KernelInvarianceError("Df does not map ker P into itself at a sampled state", residuals[k],
                                  Witness{pts[k].first, pts[k].second, {}});
    }
  }
  const auto best = std::max_element(values.begin(), values.end()) - values.begin();

  // Near-pair directions live in the complement of the kernel, where the semi-norm is a norm.
  std::vector<Eigen::VectorXd> dirs;
  for (const auto& z : sample_unit_sphere(s.base(), std::max(64, options.direction_samples), options.seed + 1)) {
    dirs.push_back(s.right_inverse() * z);
  }
  const DirectionOracle oracle = [&](double t, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd reduced = s.projector() * model.eval_jacobian(t, x) * s.right_inverse();
    std::vector<Eigen::VectorXd> out;
    for (const auto& w : measure_witness_directions(reduced, s.base(), options.measure)) {
      out.push_back(s.right_inverse() * w);
    }
    return out;
  };
  const MeasureOptions screen = screening_options(s.base(), options.measure);
  const StateScore score = [&](double t, const Eigen::VectorXd& x) {
    return matrix_measure(Eigen::MatrixXd(s.projector() * model.eval_jacobian(t, x) * s.right_inverse()),
                          s.base(), screen)
        .value;
  };
  const auto pairs = generate_osl_pairs(model, geometry, region, options, oracle, dirs, score);
  const SupEstimate osl = osl_over_pairs(model, geometry, pairs, options.threads);
  return SemiCertificate{values[static_cast<std::size_t>(best)],
                         Witness{pts[static_cast<std::size_t>(best)].first,
                                 pts[static_cast<std::size_t>(best)].second,
                                 {}},
                         osl.value,
                         osl.witness,
                         static_cast<int>(pts.size()),
                         model.kink_surfaces()};
}

SubspaceCertificate certify_subspace_contraction(const VectorFieldModel& model,
                                                 const Eigen::VectorXd& x_star, const SemiNormSpec& s,
                                                 const PairingKind& kind, const Region& region,
                                                 const SamplingOptions& options) {
  require_dim(s.cols(), model.state_dim(), "projector");
  require_dim(region.dim(), model.state_dim(), "region");
  require_dim(x_star.size(), model.state_dim(), "x_star");
  const Geometry geometry = semi_geometry(s, kind);
  const auto times = model.time_varying()
                         ? chebyshev_times(region.t0, region.t1, options.time_samples)
                         : std::vector<double>{region.t0};

  double hypothesis = 0.0;
  const Index kdim = s.kernel_basis().cols();
  const double scale = (region.upper - region.lower).maxCoeff() / 2.0;
  std::mt19937_64 rng(options.seed + 7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int kernel_samples = kdim == 0 ? 1 : 64;
  for (int k = 0; k < kernel_samples; ++k) {
    Eigen::VectorXd c(kdim);
    for (Index i = 0; i < kdim; ++i) c(i) = k == 0 ? 0.0 : scale * unit(rng);
    const Eigen::VectorXd kv = s.kernel_basis() * c;
    for (double t : times) {
      const double r = semi_norm(model.eval(t, Eigen::VectorXd(x_star + kv)), s);
      hypothesis = std::max(hypothesis, r);
      if (!(r <= 1e-8)) {
        throw HypothesisError("f(t, x* + k) leaves ker P: |||f||| = " + std::to_string(r), kv);
      }
    }
  }

  const auto pts = sample_time_states(model, region, options.state_samples, options, options.seed);
  std::vector<double> values(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto& [t, x] = pts[k];
      const Eigen::VectorXd d = x - x_star;
      const double nd = geometry.norm(d);
      values[k] = nd <= 1e-12 * (1.0 + d.norm()) ? -std::numeric_limits<double>::infinity()
                                                  : geometry.pairing(model.eval(t, x), d) / (nd * nd);
    }
  });
  const auto best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  return SubspaceCertificate{values[best], Witness{pts[best].first, pts[best].second, {}}, x_star,
                             hypothesis, static_cast<int>(pts.size())};
}

}  // namespace contraction
