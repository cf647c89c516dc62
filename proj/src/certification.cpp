#include "contraction/certification.hpp"

#include <algorithm>
#include <numeric>

namespace contraction {

const char* to_string(Condition c) {
  switch (c) {
    case Condition::jacobian_measure: return "jacobian_measure";
    case Condition::factored_measure: return "factored_measure";
    case Condition::demidovich: return "demidovich";
    case Condition::one_sided_lipschitz: return "one_sided_lipschitz";
    case Condition::equilibrium: return "equilibrium";
  }
  return "unknown";
}

Geometry Geometry::of(const NormSpec& spec, const PairingKind& kind) {
  if (!compatible(kind, spec)) {
    throw PairingError(std::string("pairing ") + to_string(kind.variant) +
                       " is incompatible with the norm exponent");
  }
  return Geometry{[spec](const Eigen::VectorXd& x) { return contraction::norm(x, spec); },
                  [spec, kind](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
                    return weak_pairing(x, y, spec, kind);
                  }};
}

namespace {

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = 0;
};

// Largest value; ties resolve to the smallest index so results do not depend on threading.
Best arg_max(const std::vector<double>& values) {
  Best best;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] > best.value) best = Best{values[k], k};
  }
  return best;
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

void require_region(const VectorFieldModel& model, const Region& region) {
  require_dim(region.dim(), model.state_dim(), "region");
}

double demidovich_ratio(const Eigen::MatrixXd& J, const Eigen::VectorXd& v, const NormSpec& spec,
                        const PairingKind& kind) {
  const double nv = norm(v, spec);
  return weak_pairing(Eigen::VectorXd(J * v), v, spec, kind) / (nv * nv);
}

double pair_ratio(const VectorFieldModel& model, const Geometry& g, const PairSample& p) {
  const Eigen::VectorXd d = p.x - p.y;
  const double nd = g.norm(d);
  if (nd == 0.0) return -std::numeric_limits<double>::infinity();
  return g.pairing(model.eval(p.t, p.x) - model.eval(p.t, p.y), d) / (nd * nd);
}

Eigen::VectorXd near_point(const Region& region, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                           double eps) {
  Eigen::VectorXd y = x + eps * v;
  if (region.contains(y)) return y;
  Eigen::VectorXd alt = x - eps * v;
  return region.contains(alt) ? alt : y;
}

ContractionCertificate make_certificate(Condition condition, const SupEstimate& est,
                                        const VectorFieldModel& model, const NormSpec& spec,
                                        const PairingKind& kind, const Region& region) {
  return ContractionCertificate{condition,  est.value,         spec, kind, region, est.samples,
                                est.witness, std::nullopt, model.kink_surfaces()};
}

using TimeState = std::pair<double, Eigen::VectorXd>;

// Compass search on the score inside the region, starting from x.
TimeState compass_search(const Region& region, const StateScore& score, TimeState start) {
  const Eigen::VectorXd width = region.upper - region.lower;
  Eigen::VectorXd step = width / 8.0;
  auto& [t, x] = start;
  double best = score(t, x);
  int evaluations = 0;
  while ((step.array() > 1e-3 * width.array()).any() && evaluations < 400) {
    bool moved = false;
    for (Index i = 0; i < x.size(); ++i) {
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd trial = x;
        trial(i) = std::clamp(x(i) + sgn * step(i), region.lower(i), region.upper(i));
        if (trial(i) == x(i)) continue;
        const double v = score(t, trial);
        ++evaluations;
        if (v > best) {
          best = v;
          x = trial;
          moved = true;
        }
      }
    }
    if (!moved) step /= 2.0;
  }
  return start;
}

// The best-scoring states of the sweep design, each refined by a compass search.
std::vector<TimeState> refined_states(const VectorFieldModel& model, const Region& region,
                                      const SamplingOptions& options, const StateScore& score) {
  const auto pts = sample_time_states(model, region, options.state_samples, options, options.seed);
  std::vector<double> values(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) values[k] = score(pts[k].first, pts[k].second);
  });
  const auto top = top_indices(values, std::max(1, options.polish_top));
  std::vector<TimeState> out(top.size());
  parallel_blocks(top.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) out[k] = compass_search(region, score, pts[top[k]]);
  });
  return out;
}

StateScore screened_measure_score(const VectorFieldModel& model, const NormSpec& spec,
                                  const SamplingOptions& options, bool factored = false) {
  const MeasureOptions screen = screening_options(spec, options.measure);
  return [&model, spec, screen, factored](double t, const Eigen::VectorXd& x) {
    return matrix_measure(factored ? model.eval_factor(t, x) : model.eval_jacobian(t, x), spec, screen).value;
  };
}

SupEstimate sup_measure_of(const VectorFieldModel& model, const NormSpec& spec,
                           const Region& region, const SamplingOptions& options, bool factored) {
  require_region(model, region);
  require_dim(spec.dim(), model.state_dim(), "norm");
  // Screen the sweep design (a short ascent when there is no closed form), refine
  // the best states by compass search and evaluate those with full accuracy.
  auto pts = refined_states(model, region, options, screened_measure_score(model, spec, options, factored));
  std::vector<double> values(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto& [t, x] = pts[k];
      values[k] = matrix_measure(factored ? model.eval_factor(t, x) : model.eval_jacobian(t, x), spec,
                                 options.measure)
                      .value;
    }
  });
  const Best best = arg_max(values);
  return SupEstimate{best.value, Witness{pts[best.index].first, pts[best.index].second, {}},
                     options.state_samples};
}

}  // namespace

MeasureOptions screening_options(const NormSpec& spec, MeasureOptions options) {
  if (spec.is_smooth() && !spec.is_l2()) {
    options.restarts = std::min(options.restarts, 2);
    options.max_iterations = std::min(options.max_iterations, 60);
  }
  return options;
}

std::vector<std::pair<double, Eigen::VectorXd>> sample_time_states(const VectorFieldModel& model,
                                                                   const Region& region, int count,
                                                                   const SamplingOptions& options,
                                                                   std::uint64_t seed) {
  const auto xs = sample_region_states(region, count, seed);
  const auto times = model.time_varying()
                         ? chebyshev_times(region.t0, region.t1, options.time_samples)
                         : std::vector<double>{region.t0};
  std::vector<std::pair<double, Eigen::VectorXd>> out;
  out.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) out.emplace_back(times[k % times.size()], xs[k]);
  return out;
}

std::vector<Eigen::VectorXd> measure_witness_directions(const Eigen::MatrixXd& J, const NormSpec& spec,
                                                        const MeasureOptions& options) {
  std::vector<Eigen::VectorXd> out;
  const auto normalize = [&](Eigen::VectorXd v) {
    v /= norm(v, spec);
    return v;
  };
  if (spec.is_linf()) {
    // The vertex attains the max pairing; the nudged vertex isolates the row so
    // that single-index pairings attain it as well.
    const Eigen::MatrixXd B = detail::similarity(J, spec);
    Index row = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < B.rows(); ++i) {
      const double r = B(i, i) + B.row(i).cwiseAbs().sum() - std::abs(B(i, i));
      if (r > best) {
        best = r;
        row = i;
      }
    }
    for (double eta : {0.0, 1e-9}) {
      out.push_back(normalize(spec.weight_inverse() * detail::linf_row_point(B, row, eta)));
    }
    return out;
  }
  const MeasureResult m = matrix_measure(J, spec, options);
  out.push_back(m.witness);
  if (spec.is_l1()) {
    const Eigen::MatrixXd B = detail::similarity(J, spec);
    Index col = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < B.cols(); ++j) {
      const double c = B(j, j) + B.col(j).cwiseAbs().sum() - std::abs(B(j, j));
      if (c > best) {
        best = c;
        col = j;
      }
    }
    out.push_back(normalize(spec.weight_inverse().col(col)));
    // Large enough offsets that the sign pattern survives in x - y of a near pair.
    out.push_back(normalize(spec.weight_inverse() * detail::l1_column_point(B, col, 1e-6)));
  }
  return out;
}

ContractionCertificate sup_jacobian_measure(const VectorFieldModel& model, const NormSpec& spec,
                                            const Region& region, const SamplingOptions& options) {
  const SupEstimate est = sup_measure_of(model, spec, region, options, false);
  return make_certificate(Condition::jacobian_measure, est, model, spec, default_pairing(spec),
                          region);
}

ContractionCertificate sup_jacobian_measure(const VectorFieldModel& model, const NormSpec& spec,
                                            const Region& region, int samples, std::uint64_t seed) {
  SamplingOptions options;
  options.state_samples = samples;
  options.seed = seed;
  return sup_jacobian_measure(model, spec, region, options);
}

ContractionCertificate factored_measure(const VectorFieldModel& model, const NormSpec& spec,
                                        const Region& region, const SamplingOptions& options) {
  if (!model.has_factorization()) {
    throw std::invalid_argument("model '" + model.name() + "' supplies no factorization A(t, x)");
  }
  const SupEstimate est = sup_measure_of(model, spec, region, options, true);
  auto cert = make_certificate(Condition::factored_measure, est, model, spec, default_pairing(spec),
                               region);
  cert.x_star = model.equilibrium();
  return cert;
}

ContractionCertificate sup_demidovich(const VectorFieldModel& model, const NormSpec& spec,
                                      const PairingKind& kind, const Region& region,
                                      const SamplingOptions& options) {
  require_region(model, region);
  if (!compatible(kind, spec)) throw PairingError("pairing incompatible with the norm");
  auto pts = sample_time_states(model, region, options.state_samples, options, options.seed);
  const auto dirs = sample_unit_sphere(spec, std::max(1, options.direction_samples), options.seed + 1);
  std::vector<double> values(pts.size());
  std::vector<Eigen::VectorXd> best_dir(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const Eigen::MatrixXd J = model.eval_jacobian(pts[k].first, pts[k].second);
      double best = -std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        const double r = demidovich_ratio(J, dirs[d], spec, kind);
        if (r > best) {
          best = r;
          arg = d;
        }
      }
      values[k] = best;
      best_dir[k] = dirs[arg];
    }
  });
  // Re-probe along measure witnesses at the best states and at the refined states.
  auto candidates = top_indices(values, options.polish_top);
  for (auto& state : refined_states(model, region, options, screened_measure_score(model, spec, options))) {
    pts.push_back(std::move(state));
    values.push_back(-std::numeric_limits<double>::infinity());
    best_dir.emplace_back();
    candidates.push_back(pts.size() - 1);
  }
  for (std::size_t k : candidates) {
    const Eigen::MatrixXd J = model.eval_jacobian(pts[k].first, pts[k].second);
    for (const auto& w : measure_witness_directions(J, spec, options.measure)) {
      const double r = demidovich_ratio(J, w, spec, kind);
      if (r > values[k]) {
        values[k] = r;
        best_dir[k] = w;
      }
    }
  }
  const Best best = arg_max(values);
  const SupEstimate est{best.value,
                        Witness{pts[best.index].first, pts[best.index].second, best_dir[best.index]},
                        options.state_samples * static_cast<int>(dirs.size())};
  return make_certificate(Condition::demidovich, est, model, spec, kind, region);
}

ContractionCertificate sup_demidovich(const VectorFieldModel& model, const NormSpec& spec,
                                      const PairingKind& kind, const Region& region,
                                      int state_samples, int direction_samples, std::uint64_t seed) {
  SamplingOptions options;
  options.state_samples = state_samples;
  options.direction_samples = direction_samples;
  options.seed = seed;
  return sup_demidovich(model, spec, kind, region, options);
}

std::vector<PairSample> generate_osl_pairs(const VectorFieldModel& model, const Geometry& geometry,
                                           const Region& region, const SamplingOptions& options,
                                           const DirectionOracle& oracle,
                                           const std::vector<Eigen::VectorXd>& directions,
                                           const StateScore& score) {
  require_region(model, region);
  if (options.pair_samples < 1) throw std::invalid_argument("pair sample count must be >= 1");
  if (directions.empty()) throw std::invalid_argument("near-pair directions must be nonempty");
  const int far_count = options.pair_samples / 4;
  const int near_count = std::max(1, options.pair_samples - far_count);
  const double eps = options.near_pair_epsilon;

  std::vector<PairSample> pairs;
  pairs.reserve(static_cast<std::size_t>(options.pair_samples + options.polish_top * 4));
  const auto base = sample_time_states(model, region, near_count, options, options.seed);
  for (std::size_t k = 0; k < base.size(); ++k) {
    const auto& [t, x] = base[k];
    pairs.push_back({t, x, near_point(region, x, directions[k % directions.size()], eps)});
  }
  if (far_count > 0) {
    const auto xs = sample_time_states(model, region, far_count, options, options.seed + 3);
    auto ys = sample_region_states(region, far_count, options.seed + 4);
    std::reverse(ys.begin(), ys.end());
    for (std::size_t k = 0; k < xs.size(); ++k) pairs.push_back({xs[k].first, xs[k].second, ys[k]});
  }

  if (oracle && options.polish_top > 0) {
    std::vector<double> ratios(base.size());
    parallel_blocks(base.size(), options.threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) ratios[k] = pair_ratio(model, geometry, pairs[k]);
    });
    std::vector<TimeState> chosen;
    for (std::size_t k : top_indices(ratios, options.polish_top)) chosen.emplace_back(pairs[k].t, pairs[k].x);
    if (score) {
      for (auto& state : refined_states(model, region, options, score)) chosen.push_back(std::move(state));
    }
    for (const auto& [t, x] : chosen) {
      for (const auto& w : oracle(t, x)) pairs.push_back({t, x, near_point(region, x, w, eps)});
    }
  }
  return pairs;
}

SupEstimate osl_over_pairs(const VectorFieldModel& model, const Geometry& geometry,
                           const std::vector<PairSample>& pairs, int threads) {
  if (pairs.empty()) throw std::invalid_argument("no sample pairs");
  std::vector<double> values(pairs.size());
  parallel_blocks(pairs.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) values[k] = pair_ratio(model, geometry, pairs[k]);
  });
  const Best best = arg_max(values);
  const auto& p = pairs[best.index];
  return SupEstimate{best.value, Witness{p.t, p.x, p.y}, static_cast<int>(pairs.size())};
}

namespace {

std::vector<PairSample> spec_pairs(const VectorFieldModel& model, const NormSpec& spec,
                                   const PairingKind& kind, const Region& region,
                                   const SamplingOptions& options) {
  const Geometry geometry = Geometry::of(spec, kind);
  const auto dirs = sample_unit_sphere(spec, std::max(64, options.direction_samples), options.seed + 1);
  const DirectionOracle oracle = [&](double t, const Eigen::VectorXd& x) {
    return measure_witness_directions(model.eval_jacobian(t, x), spec, options.measure);
  };
  return generate_osl_pairs(model, geometry, region, options, oracle, dirs,
                            screened_measure_score(model, spec, options));
}

}  // namespace

ContractionCertificate estimate_osL(const VectorFieldModel& model, const NormSpec& spec,
                                    const PairingKind& kind, const Region& region,
                                    const SamplingOptions& options) {
  const auto pairs = spec_pairs(model, spec, kind, region, options);
  const SupEstimate est = osl_over_pairs(model, Geometry::of(spec, kind), pairs, options.threads);
  return make_certificate(Condition::one_sided_lipschitz, est, model, spec, kind, region);
}

ContractionCertificate estimate_osL(const VectorFieldModel& model, const NormSpec& spec,
                                    const PairingKind& kind, const Region& region, int pair_samples,
                                    std::uint64_t seed) {
  SamplingOptions options;
  options.pair_samples = pair_samples;
  options.seed = seed;
  return estimate_osL(model, spec, kind, region, options);
}

ContractionCertificate check_equilibrium_contraction(const VectorFieldModel& model,
                                                     const Eigen::VectorXd& x_star,
                                                     const NormSpec& spec, const PairingKind& kind,
                                                     const Region& region,
                                                     const SamplingOptions& options) {
  require_region(model, region);
  require_dim(x_star.size(), model.state_dim(), "equilibrium");
  const Geometry g = Geometry::of(spec, kind);
  const auto times = model.time_varying()
                         ? chebyshev_times(region.t0, region.t1, options.time_samples)
                         : std::vector<double>{region.t0};
  for (double t : times) {
    const double residual = norm(model.eval(t, x_star), spec);
    if (!(residual <= 1e-8)) {
      throw PreconditionError("x_star is not an equilibrium: ||f(t, x*)|| = " +
                                  std::to_string(residual) + " at t = " + std::to_string(t),
                              residual);
    }
  }
  const auto pts = sample_time_states(model, region, options.state_samples, options, options.seed);
  std::vector<double> values(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const auto& [t, x] = pts[k];
      const Eigen::VectorXd d = x - x_star;
      const double nd = g.norm(d);
      values[k] = nd == 0.0 ? -std::numeric_limits<double>::infinity()
                            : g.pairing(model.eval(t, x), d) / (nd * nd);
    }
  });
  const Best best = arg_max(values);
  const SupEstimate est{best.value, Witness{pts[best.index].first, pts[best.index].second, {}},
                        static_cast<int>(pts.size())};
  auto cert = make_certificate(Condition::equilibrium, est, model, spec, kind, region);
  cert.x_star = x_star;
  return cert;
}

double reevaluate(const ContractionCertificate& cert, const VectorFieldModel& model,
                  const MeasureOptions& options) {
  const Witness& w = cert.worst_witness;
  switch (cert.condition) {
    case Condition::jacobian_measure:
      return matrix_measure(model.eval_jacobian(w.t, w.x), cert.spec, options).value;
    case Condition::factored_measure:
      return matrix_measure(model.eval_factor(w.t, w.x), cert.spec, options).value;
    case Condition::demidovich:
      return demidovich_ratio(model.eval_jacobian(w.t, w.x), w.aux, cert.spec, cert.kind);
    case Condition::one_sided_lipschitz:
      return pair_ratio(model, Geometry::of(cert.spec, cert.kind), PairSample{w.t, w.x, w.aux});
    case Condition::equilibrium: {
      const Eigen::VectorXd d = w.x - *cert.x_star;
      const double nd = norm(d, cert.spec);
      return weak_pairing(model.eval(w.t, w.x), d, cert.spec, cert.kind) / (nd * nd);
    }
  }
  throw std::logic_error("unknown condition");
}

PerturbationBound compose_perturbation(const ContractionCertificate& cert_f,
                                       const ContractionCertificate& cert_g, double g_at_xstar_norm) {
  if (cert_f.spec.p() != cert_g.spec.p() || cert_f.spec.dim() != cert_g.spec.dim() ||
      !cert_f.spec.weight().isApprox(cert_g.spec.weight()) ||
      cert_f.kind.variant != cert_g.kind.variant) {
    throw std::invalid_argument("perturbation certificates must share norm and pairing");
  }
  if (!(cert_f.bound_b < 0.0)) {
    throw NoGuaranteeError("nominal field is not contracting (osL >= 0)", cert_g.bound_b + cert_f.bound_b);
  }
  if (g_at_xstar_norm < 0.0) throw std::invalid_argument("||g(x*)|| must be nonnegative");
  const double c = -cert_f.bound_b;
  const double d = cert_g.bound_b;
  if (!(d < c)) {
    throw NoGuaranteeError("perturbation osL d = " + std::to_string(d) +
                               " does not stay below the contraction rate c = " + std::to_string(c),
                           d - c);
  }
  return PerturbationBound{c - d, g_at_xstar_norm / (c - d)};
}

OslAlgebraReport osl_algebra_check(const VectorFieldModel& f, const VectorFieldModel& g, double c,
                                   double alpha, const NormSpec& spec, const PairingKind& kind,
                                   const Region& region, const SamplingOptions& options, double tol) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  const VectorFieldModel shifted = shift_field(f, c);
  const VectorFieldModel scaled = scale_field(f, alpha);
  const VectorFieldModel sum = add_fields(f, g);
  std::vector<PairSample> pairs;
  for (const VectorFieldModel* m : {&f, &g, &shifted, &scaled, &sum}) {
    auto p = spec_pairs(*m, spec, kind, region, options);
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  const Geometry geo = Geometry::of(spec, kind);
  OslAlgebraReport r{};
  r.osl_f = osl_over_pairs(f, geo, pairs, options.threads).value;
  r.osl_g = osl_over_pairs(g, geo, pairs, options.threads).value;
  r.osl_shifted = osl_over_pairs(shifted, geo, pairs, options.threads).value;
  r.osl_scaled = osl_over_pairs(scaled, geo, pairs, options.threads).value;
  r.osl_sum = osl_over_pairs(sum, geo, pairs, options.threads).value;
  double lip = 0.0;
  for (const auto& p : pairs) {
    const double nd = norm(Eigen::VectorXd(p.x - p.y), spec);
    if (nd > 0.0) lip = std::max(lip, norm(Eigen::VectorXd(f.eval(p.t, p.x) - f.eval(p.t, p.y)), spec) / nd);
  }
  r.lipschitz_f = lip;
  const double scale = 1.0 + std::abs(r.osl_f);
  r.shift_ok = std::abs(r.osl_shifted - r.osl_f - c) <= tol * (scale + std::abs(c));
  r.scaling_ok = std::abs(r.osl_scaled - alpha * r.osl_f) <= tol * (1.0 + alpha * scale);
  r.subadditive_ok = r.osl_sum <= r.osl_f + r.osl_g + tol * (scale + std::abs(r.osl_g));
  r.lipschitz_ok = r.osl_f <= r.lipschitz_f + tol * (1.0 + lip);
  return r;
}

std::optional<double> induced_norm(const Eigen::MatrixXd& M, const NormSpec& from, const NormSpec& to) {
  if (from.p() != to.p()) return std::nullopt;
  const Eigen::MatrixXd S = to.weight() * M * from.weight_inverse();
  if (from.is_l1()) return S.cwiseAbs().colwise().sum().maxCoeff();
  if (from.is_linf()) return S.cwiseAbs().rowwise().sum().maxCoeff();
  if (from.is_l2()) return Eigen::JacobiSVD<Eigen::MatrixXd>(S).singularValues()(0);
  return std::nullopt;
}

double estimate_input_lipschitz(const VectorFieldModel& model, const NormSpec& spec_x,
                                const NormSpec& spec_u, const Region& region,
                                const Region& input_region, const SamplingOptions& options) {
  require_region(model, region);
  require_dim(input_region.dim(), model.input_dim(), "input region");
  const auto pts = sample_time_states(model, region, options.pair_samples, options, options.seed);
  const auto us = sample_region_states(input_region, options.pair_samples, options.seed + 5);
  auto vs = sample_region_states(input_region, options.pair_samples, options.seed + 6);
  std::reverse(vs.begin(), vs.end());
  std::vector<double> values(pts.size());
  parallel_blocks(pts.size(), options.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const double nu = norm(Eigen::VectorXd(us[k] - vs[k]), spec_u);
      values[k] = nu == 0.0 ? 0.0
                            : norm(Eigen::VectorXd(model.eval(pts[k].first, pts[k].second, us[k]) -
                                                   model.eval(pts[k].first, pts[k].second, vs[k])),
                                   spec_x) / nu;
    }
  });
  double best = arg_max(values).value;
  for (std::size_t k : top_indices(values, options.polish_top)) {
    const auto B = model.eval_input_jacobian(pts[k].first, pts[k].second, us[k]);
    if (auto v = induced_norm(B, spec_u, spec_x)) best = std::max(best, *v);
  }
  return best;
}

namespace {

std::vector<Expr> state_terms(int n) {
  std::vector<Expr> xs;
  for (int i = 0; i < n; ++i) xs.push_back(Expr::state(i));
  return xs;
}

}  // namespace

VectorFieldModel add_fields(const VectorFieldModel& f, const VectorFieldModel& g) {
  require_dim(g.state_dim(), f.state_dim(), "field sum");
  std::vector<Expr> comps;
  for (int i = 0; i < f.state_dim(); ++i) comps.push_back(f.components()[i] + g.components()[i]);
  return VectorFieldModel(f.name() + "+" + g.name(), f.state_dim(),
                          std::max(f.input_dim(), g.input_dim()), std::move(comps));
}

VectorFieldModel scale_field(const VectorFieldModel& f, double alpha) {
  std::vector<Expr> comps;
  for (const Expr& c : f.components()) comps.push_back(Expr::constant(alpha) * c);
  return VectorFieldModel(f.name() + "*" + std::to_string(alpha), f.state_dim(), f.input_dim(),
                          std::move(comps), f.equilibrium());
}

VectorFieldModel shift_field(const VectorFieldModel& f, double c) {
  const auto xs = state_terms(f.state_dim());
  std::vector<Expr> comps;
  for (int i = 0; i < f.state_dim(); ++i) comps.push_back(f.components()[i] + Expr::constant(c) * xs[i]);
  return VectorFieldModel(f.name() + "+cI", f.state_dim(), f.input_dim(), std::move(comps));
}

VectorFieldModel offset_field(const VectorFieldModel& f, const Eigen::VectorXd& b) {
  require_dim(b.size(), f.state_dim(), "offset");
  std::vector<Expr> comps;
  for (int i = 0; i < f.state_dim(); ++i) comps.push_back(f.components()[i] + Expr::constant(b(i)));
  return VectorFieldModel(f.name() + "+b", f.state_dim(), f.input_dim(), std::move(comps));
}

}  // namespace contraction
