#include "contraction/interconnection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <queue>

namespace contraction {

bool is_metzler(const Eigen::MatrixXd& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (i != j && !(M(i, j) >= 0.0)) return false;
    }
  }
  return true;
}

namespace {

void require_metzler(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionError("expected a nonempty square matrix");
  if (!M.allFinite()) throw std::invalid_argument("matrix has non-finite entries");
  if (!is_metzler(M)) throw std::invalid_argument("matrix is not Metzler (negative off-diagonal entry)");
}

std::vector<bool> reachable(const Eigen::MatrixXd& M, bool transpose) {
  const Index n = M.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Index> queue;
  queue.push(0);
  seen[0] = true;
  while (!queue.empty()) {
    const Index i = queue.front();
    queue.pop();
    for (Index j = 0; j < n; ++j) {
      const double w = transpose ? M(j, i) : M(i, j);
      if (j != i && w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        queue.push(j);
      }
    }
  }
  return seen;
}

Eigen::VectorXd power_iteration(const Eigen::MatrixXd& N) {
  const Index n = N.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  for (int it = 0; it < 200000; ++it) {
    Eigen::VectorXd w = N * v;
    w /= w.norm();
    const double change = (w - v).lpNorm<Eigen::Infinity>();
    v = std::move(w);
    if (change < 1e-12) break;
  }
  return v;
}

Eigen::VectorXd inverse_polish(const Eigen::MatrixXd& M, Eigen::VectorXd v, double alpha) {
  const Index n = M.rows();
  const double sigma = alpha + 1e-8 * (1.0 + std::abs(alpha));
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M - sigma * Eigen::MatrixXd::Identity(n, n));
  for (int it = 0; it < 2; ++it) {
    Eigen::VectorXd w = lu.solve(v);
    if (!w.allFinite() || w.norm() == 0.0) break;
    w /= w.norm();
    if (w.sum() < 0.0) w = -w;
    v = std::move(w);
  }
  return v;
}

std::vector<std::size_t> top_indices(const std::vector<double>& values, int count) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto k = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(0, count)));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

bool is_irreducible(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionError("expected a nonempty square matrix");
  if (M.rows() == 1) return true;
  const auto fwd = reachable(M, false);
  const auto bwd = reachable(M, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

double spectral_abscissa(const Eigen::MatrixXd& M) {
  require_metzler(M);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().real().maxCoeff();
}

PerronPair perron_vectors(const Eigen::MatrixXd& M) {
  require_metzler(M);
  const Index n = M.rows();
  const double alpha = spectral_abscissa(M);
  if (n == 1) return PerronPair{alpha, Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1)};
  if (!is_irreducible(M)) throw std::invalid_argument("Perron vectors need an irreducible matrix");
  const double beta = M.diagonal().minCoeff() - 1.0;
  const Eigen::MatrixXd N = M - beta * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd v = inverse_polish(M, power_iteration(N), alpha);
  Eigen::VectorXd u = inverse_polish(M.transpose(), power_iteration(N.transpose()), alpha);
  if (!((v.array() > 0.0).all() && (u.array() > 0.0).all())) {
    throw std::runtime_error("Perron vectors lost positivity");
  }
  return PerronPair{alpha, v, u};
}

double lmi_residual(const Eigen::MatrixXd& M, const Eigen::VectorXd& xi, double level) {
  require_dim(xi.size(), M.rows(), "weights");
  const Eigen::MatrixXd D = xi.asDiagonal();
  const Eigen::MatrixXd S = D * M + M.transpose() * D - 2.0 * level * D;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

DiagonalWeights diagonal_weights(const Eigen::MatrixXd& M, double epsilon) {
  require_metzler(M);
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  const Index n = M.rows();
  const double alpha = spectral_abscissa(M);
  const auto weights_of = [](const PerronPair& p) {
    Eigen::VectorXd xi = p.left.cwiseQuotient(p.right);
    return Eigen::VectorXd(xi / xi.minCoeff());
  };
  if (is_irreducible(M)) {
    const Eigen::VectorXd xi = weights_of(perron_vectors(M));
    const double res = lmi_residual(M, xi, alpha + epsilon);
    if (!(res <= 1e-9)) throw LmiError("diagonal weights fail the LMI", res);
    return DiagonalWeights{xi, epsilon, alpha, res, 0.0};
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("a reducible matrix needs epsilon > 0");
  const Eigen::MatrixXd offdiag =
      Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
  double delta = epsilon / (4.0 * static_cast<double>(n));
  double last = std::numeric_limits<double>::infinity();
  for (int halving = 0; halving <= 40; ++halving, delta /= 2.0) {
    const Eigen::MatrixXd Md = M + delta * offdiag;
    if (spectral_abscissa(Md) - alpha > epsilon) continue;
    const Eigen::VectorXd xi = weights_of(perron_vectors(Md));
    last = lmi_residual(M, xi, alpha + epsilon);
    if (last <= 1e-9) return DiagonalWeights{xi, epsilon, alpha, last, delta};
  }
  throw LmiError("no perturbation delta produced weights satisfying the LMI", last);
}

int BlockLayout::total() const { return std::accumulate(dims.begin(), dims.end(), 0); }

int BlockLayout::offset(std::size_t block) const {
  return std::accumulate(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(block), 0);
}

std::vector<Eigen::VectorXd> BlockLayout::split(const Eigen::VectorXd& x) const {
  require_dim(x.size(), total(), "stacked state");
  std::vector<Eigen::VectorXd> out;
  int off = 0;
  for (int d : dims) {
    out.push_back(x.segment(off, d));
    off += d;
  }
  return out;
}

double aggregate_norm(const std::vector<Eigen::VectorXd>& x_blocks, const Eigen::VectorXd& xi,
                      const std::vector<NormSpec>& norms) {
  require_dim(static_cast<Index>(x_blocks.size()), xi.size(), "block count");
  require_dim(static_cast<Index>(norms.size()), xi.size(), "block norms");
  double acc = 0.0;
  for (std::size_t i = 0; i < x_blocks.size(); ++i) {
    const double v = norm(x_blocks[i], norms[i]);
    acc += xi(static_cast<Index>(i)) * v * v;
  }
  return std::sqrt(acc);
}

double aggregate_pairing(const std::vector<Eigen::VectorXd>& x_blocks,
                         const std::vector<Eigen::VectorXd>& y_blocks, const Eigen::VectorXd& xi,
                         const std::vector<NormSpec>& norms, const std::vector<PairingKind>& pairings) {
  require_dim(static_cast<Index>(x_blocks.size()), xi.size(), "block count");
  require_dim(static_cast<Index>(y_blocks.size()), xi.size(), "block count");
  require_dim(static_cast<Index>(norms.size()), xi.size(), "block norms");
  require_dim(static_cast<Index>(pairings.size()), xi.size(), "block pairings");
  double acc = 0.0;
  for (std::size_t i = 0; i < x_blocks.size(); ++i) {
    acc += xi(static_cast<Index>(i)) * weak_pairing(x_blocks[i], y_blocks[i], norms[i], pairings[i]);
  }
  return acc;
}

Geometry aggregate_geometry(const BlockLayout& layout, const Eigen::VectorXd& xi,
                            const std::vector<NormSpec>& norms,
                            const std::vector<PairingKind>& pairings) {
  return Geometry{
      [=](const Eigen::VectorXd& x) { return aggregate_norm(layout.split(x), xi, norms); },
      [=](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return aggregate_pairing(layout.split(x), layout.split(y), xi, norms, pairings);
      }};
}

GainMatrix gain_matrix(const Eigen::VectorXd& rates, const Eigen::MatrixXd& cross_gains) {
  const Index n = rates.size();
  if (cross_gains.rows() != n || cross_gains.cols() != n || n == 0) {
    throw DimensionError("gain matrix dimensions do not match the number of subsystems");
  }
  if (!((rates.array() > 0.0).all())) throw std::invalid_argument("self rates c_i must be positive");
  Eigen::MatrixXd G = cross_gains;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && !(G(i, j) >= 0.0)) throw std::invalid_argument("cross gains must be nonnegative");
    }
    G(i, i) = -rates(i);
  }
  return GainMatrix{G, spectral_abscissa(G), is_irreducible(G)};
}

Distance NetworkCertificate::distance() const {
  const Eigen::VectorXd xi = weights ? weights->xi : Eigen::VectorXd::Ones(static_cast<Index>(norms.size()));
  return [layout = layout, xi, norms = norms](const Eigen::VectorXd& x) {
    return aggregate_norm(layout.split(x), xi, norms);
  };
}

Geometry NetworkCertificate::geometry() const {
  const Eigen::VectorXd xi = weights ? weights->xi : Eigen::VectorXd::Ones(static_cast<Index>(norms.size()));
  return aggregate_geometry(layout, xi, norms, pairings);
}

namespace {

BlockLayout layout_of(const std::vector<SubsystemSpec>& subsystems) {
  if (subsystems.empty()) throw std::invalid_argument("network needs at least one subsystem");
  BlockLayout layout;
  for (const auto& s : subsystems) {
    if (s.dim <= 0) throw DimensionError("subsystem '" + s.name + "' has no states");
    require_dim(static_cast<Index>(s.components.size()), s.dim, "subsystem components");
    require_dim(s.norm.dim(), s.dim, "subsystem norm");
    if (!compatible(s.pairing, s.norm)) {
      throw PairingError("subsystem '" + s.name + "' pairing is incompatible with its norm");
    }
    layout.dims.push_back(s.dim);
  }
  return layout;
}

struct BlockSampler {
  VectorFieldModel network;
  BlockLayout layout;
  std::vector<std::pair<double, Eigen::VectorXd>> states;
  std::vector<Eigen::VectorXd> others;

  BlockSampler(const std::vector<SubsystemSpec>& subsystems, const Region& region,
               const SamplingOptions& options)
      : network(assemble_network(subsystems)), layout(layout_of(subsystems)) {
    require_dim(region.dim(), layout.total(), "network region");
    states = sample_time_states(network, region, options.pair_samples, options, options.seed);
    others = sample_region_states(region, options.pair_samples, options.seed + 4);
    std::reverse(others.begin(), others.end());
  }

  Eigen::VectorXd block_field(std::size_t i, double t, const Eigen::VectorXd& x) const {
    return network.eval(t, x).segment(layout.offset(i), layout.dims[i]);
  }

  // Pairs (x, y) that differ only in block j; near pairs first, then far pairs.
  std::vector<Eigen::VectorXd> partners(std::size_t j, const NormSpec& spec_j, const Region& region,
                                        const SamplingOptions& options) const {
    const auto dirs = sample_unit_sphere(spec_j, std::max(64, options.direction_samples), options.seed + 1);
    const int off = layout.offset(j);
    const std::size_t far_start = states.size() - states.size() / 4;
    std::vector<Eigen::VectorXd> ys;
    ys.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) {
      Eigen::VectorXd y = states[k].second;
      if (k < far_start) {
        y.segment(off, layout.dims[j]) += options.near_pair_epsilon * dirs[k % dirs.size()];
        if (!region.contains(y)) {
          y.segment(off, layout.dims[j]) -= 2.0 * options.near_pair_epsilon * dirs[k % dirs.size()];
        }
      } else {
        y.segment(off, layout.dims[j]) = others[k].segment(off, layout.dims[j]);
      }
      ys.push_back(std::move(y));
    }
    return ys;
  }
};

Eigen::MatrixXd jacobian_block(const BlockSampler& s, std::size_t i, std::size_t j, double t,
                               const Eigen::VectorXd& x) {
  return s.network.eval_jacobian(t, x).block(s.layout.offset(i), s.layout.offset(j), s.layout.dims[i],
                                            s.layout.dims[j]);
}

}  // namespace

VectorFieldModel assemble_network(const std::vector<SubsystemSpec>& subsystems) {
  const BlockLayout layout = layout_of(subsystems);
  const int n = layout.total();
  std::vector<Expr> comps;
  int input_offset = 0;
  for (const auto& s : subsystems) {
    if (s.inputs < 0) throw DimensionError("subsystem '" + s.name + "' has a negative input count");
    for (const Expr& e : s.components) {
      if (max_state_index(e) >= n) {
        throw std::invalid_argument("subsystem '" + s.name + "' references a state beyond the network");
      }
      if (max_input_index(e) >= s.inputs) {
        throw std::invalid_argument("subsystem '" + s.name + "' references an undeclared input");
      }
      comps.push_back(remap_variables(e, 0, input_offset));
    }
    input_offset += s.inputs;
  }
  return VectorFieldModel("network", n, input_offset, std::move(comps));
}

double estimate_self_rate(const std::vector<SubsystemSpec>& subsystems, std::size_t i,
                          const Region& region, const SamplingOptions& options) {
  if (i >= subsystems.size()) throw std::out_of_range("subsystem index");
  const BlockSampler s(subsystems, region, options);
  const auto& spec = subsystems[i].norm;
  const auto& kind = subsystems[i].pairing;
  const int off = s.layout.offset(i);
  const int d = s.layout.dims[i];
  const auto ratio = [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd dx = x.segment(off, d) - y.segment(off, d);
    const double nd = norm(dx, spec);
    if (nd == 0.0) return -std::numeric_limits<double>::infinity();
    return weak_pairing(Eigen::VectorXd(s.block_field(i, t, x) - s.block_field(i, t, y)), dx, spec, kind) /
           (nd * nd);
  };
  const auto ys = s.partners(i, spec, region, options);
  std::vector<double> values(ys.size());
  parallel_blocks(ys.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) values[k] = ratio(s.states[k].first, s.states[k].second, ys[k]);
  });
  double best = *std::max_element(values.begin(), values.end());
  for (std::size_t k : top_indices(values, options.polish_top)) {
    const auto& [t, x] = s.states[k];
    for (const auto& w : measure_witness_directions(jacobian_block(s, i, i, t, x), spec, options.measure)) {
      Eigen::VectorXd y = x;
      y.segment(off, d) += options.near_pair_epsilon * w;
      best = std::max(best, ratio(t, x, y));
    }
  }
  return -best;
}

double estimate_cross_gain(const std::vector<SubsystemSpec>& subsystems, std::size_t i, std::size_t j,
                           const Region& region, const SamplingOptions& options) {
  if (i >= subsystems.size() || j >= subsystems.size()) throw std::out_of_range("subsystem index");
  if (i == j) throw std::invalid_argument("cross gains need distinct blocks");
  const BlockSampler s(subsystems, region, options);
  const auto& spec_i = subsystems[i].norm;
  const auto& spec_j = subsystems[j].norm;
  const int off = s.layout.offset(j);
  const int d = s.layout.dims[j];
  const auto ys = s.partners(j, spec_j, region, options);
  std::vector<double> values(ys.size());
  parallel_blocks(ys.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto& [t, x] = s.states[k];
      const double nd = norm(Eigen::VectorXd(x.segment(off, d) - ys[k].segment(off, d)), spec_j);
      values[k] = nd == 0.0 ? 0.0
                            : norm(Eigen::VectorXd(s.block_field(i, t, x) - s.block_field(i, t, ys[k])),
                                   spec_i) / nd;
    }
  });
  double best = *std::max_element(values.begin(), values.end());
  for (std::size_t k : top_indices(values, options.polish_top)) {
    const auto& [t, x] = s.states[k];
    if (auto v = induced_norm(jacobian_block(s, i, j, t, x), spec_j, spec_i)) best = std::max(best, *v);
  }
  return best;
}

NetworkCertificate certify_network(const std::vector<SubsystemSpec>& subsystems, double epsilon,
                                   const std::optional<Region>& region,
                                   const SamplingOptions& options) {
  const BlockLayout layout = layout_of(subsystems);
  const std::size_t n = subsystems.size();
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  const auto need_region = [&](const std::string& what) -> const Region& {
    if (!region) throw std::invalid_argument(what + " is not declared and no region was given to estimate it");
    return *region;
  };
  bool estimated = false;
  Eigen::VectorXd rates(static_cast<Index>(n));
  Eigen::MatrixXd gains = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = subsystems[i];
    const auto ii = static_cast<Index>(i);
    if (s.self_rate) {
      rates(ii) = *s.self_rate;
    } else {
      rates(ii) = estimate_self_rate(subsystems, i, need_region("self rate of '" + s.name + "'"), options);
      estimated = true;
      if (!(rates(ii) > 0.0)) {
        throw NoGuaranteeError("subsystem '" + s.name + "' is not contracting: sampled osL " +
                                   std::to_string(-rates(ii)),
                               -rates(ii));
      }
    }
    if (s.cross_gains) {
      require_dim(static_cast<Index>(s.cross_gains->size()), static_cast<Index>(n), "cross gains");
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) gains(ii, static_cast<Index>(j)) = (*s.cross_gains)[j];
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        gains(ii, static_cast<Index>(j)) =
            estimate_cross_gain(subsystems, i, j, need_region("cross gains of '" + s.name + "'"), options);
      }
      estimated = true;
    }
  }
  const GainMatrix gain = gain_matrix(rates, gains);
  std::vector<NormSpec> norms;
  std::vector<PairingKind> pairings;
  for (const auto& s : subsystems) {
    norms.push_back(s.norm);
    pairings.push_back(s.pairing);
  }
  NetworkCertificate cert{gain,   false,  0.0,      0.0,      std::nullopt,
                          assemble_network(subsystems), layout, norms, pairings, estimated};
  if (gain.alpha >= 0.0) return cert;
  if (gain.irreducible) {
    cert.weights = diagonal_weights(gain.gamma, 0.0);
  } else {
    if (!(epsilon > 0.0)) throw std::invalid_argument("a reducible gain matrix needs epsilon > 0");
    if (gain.alpha + epsilon >= 0.0) return cert;
    cert.epsilon = epsilon;
    cert.weights = diagonal_weights(gain.gamma, epsilon);
  }
  cert.certified = true;
  cert.rate = std::abs(gain.alpha + cert.epsilon);
  return cert;
}

}  // namespace contraction
