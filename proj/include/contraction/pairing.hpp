#pragma once

// Weak pairings [[x, y]] compatible with weighted lp norms, Deimling pairings
// (x, y)_+ and numeric one-sided directional derivatives of the norm.

#include "contraction/norm.hpp"

#include <array>
#include <functional>
#include <span>

namespace contraction {

enum class PairingVariant {
  gateaux_lp,          // p in ]1, inf[, the unique pairing of a smooth norm
  sign_l1,             // ||y||_1 sign(y)^T x
  max_linf,            // max over I_inf(y) of x_i y_i
  deimling_numeric,    // ||y|| times the numeric one-sided derivative
  deimling_l1_closed,  // closed form of the l1 Deimling pairing
  single_index,        // (x)_f(I) (y)_f(I) for a choice rule f on I_inf(y)
};

/// Picks one element of a nonempty index set.
using IndexChoice = std::function<Index(std::span<const Index>)>;

inline Index smallest_index(std::span<const Index> set) { return set.front(); }
inline Index largest_index(std::span<const Index> set) { return set.back(); }

struct PairingKind {
  PairingVariant variant = PairingVariant::gateaux_lp;
  IndexChoice choice = smallest_index;
};

inline PairingKind pairing_kind(PairingVariant v) { return PairingKind{v, smallest_index}; }

const char* to_string(PairingVariant v);
PairingVariant parse_pairing_variant(const std::string& name);

class PairingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
bool compatible(const PairingKind& kind, const BasicNormSpec<Scalar>& spec) {
  switch (kind.variant) {
    case PairingVariant::gateaux_lp: return spec.is_smooth();
    case PairingVariant::sign_l1:
    case PairingVariant::deimling_l1_closed: return spec.is_l1();
    case PairingVariant::max_linf:
    case PairingVariant::single_index: return spec.is_linf();
    case PairingVariant::deimling_numeric: return true;
  }
  return false;
}

/// The canonical pairing for a norm: sign for l1, max for l_inf, Gateaux otherwise.
template <typename Scalar>
PairingKind default_pairing(const BasicNormSpec<Scalar>& spec) {
  if (spec.is_l1()) return pairing_kind(PairingVariant::sign_l1);
  if (spec.is_linf()) return pairing_kind(PairingVariant::max_linf);
  return pairing_kind(PairingVariant::gateaux_lp);
}

namespace detail {

// Pairings on already-weighted coordinates zx = R x, zy = R y.

template <typename Scalar, typename A, typename B>
Scalar gateaux(const Eigen::MatrixBase<A>& zx, const Eigen::MatrixBase<B>& zy, Scalar p) {
  using std::abs;
  using std::pow;
  if (p == Scalar(2)) return zx.dot(zy);
  const Scalar m = zy.cwiseAbs().maxCoeff();
  if (m == Scalar(0)) return Scalar(0);
  // ||y||^{2-p} (y o |y|^{p-2})^T x, evaluated on y/m to stay in range.
  Scalar acc(0);
  Scalar np(0);
  for (Index i = 0; i < zy.size(); ++i) {
    const Scalar w = abs(zy(i)) / m;
    if (w == Scalar(0)) continue;
    acc += sign(zy(i)) * pow(w, p - Scalar(1)) * zx(i);
    np += pow(w, p);
  }
  const Scalar wnorm = pow(np, Scalar(1) / p);
  return m * pow(wnorm, Scalar(2) - p) * acc;
}

template <typename Scalar, typename A, typename B>
Scalar sign_pairing(const Eigen::MatrixBase<A>& zx, const Eigen::MatrixBase<B>& zy) {
  Scalar s(0);
  for (Index i = 0; i < zy.size(); ++i) s += sign(zy(i)) * zx(i);
  return zy.cwiseAbs().sum() * s;
}

template <typename Scalar, typename A, typename B>
Scalar max_pairing(const Eigen::MatrixBase<A>& zx, const Eigen::MatrixBase<B>& zy) {
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (Index i : inf_index_set(zy)) best = std::max<Scalar>(best, zx(i) * zy(i));
  return best;
}

template <typename Scalar, typename A, typename B>
Scalar deimling_l1(const Eigen::MatrixBase<A>& zx, const Eigen::MatrixBase<B>& zy) {
  using std::abs;
  Scalar s(0);
  for (Index i = 0; i < zy.size(); ++i) {
    s += zy(i) == Scalar(0) ? abs(zx(i)) : sign(zy(i)) * zx(i);
  }
  return zy.cwiseAbs().sum() * s;
}

template <typename Scalar, typename A, typename B>
Scalar deimling_linf(const Eigen::MatrixBase<A>& zx, const Eigen::MatrixBase<B>& zy) {
  const Scalar ny = zy.cwiseAbs().maxCoeff();
  if (ny == Scalar(0)) return Scalar(0);
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (Index i : inf_index_set(zy)) best = std::max<Scalar>(best, sign(zy(i)) * zx(i));
  return ny * best;
}

}  // namespace detail

/// lim_{h->0+} (||y + h x|| - ||y||) / h from a halving h-sequence and a Richardson tableau.
template <typename DX, typename DY>
typename DX::Scalar directional_norm_derivative(
    const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
    const BasicNormSpec<typename DX::Scalar>& spec) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using std::abs;
  require_dim(y.size(), x.size(), "directional derivative");
  const Vector zx = spec.apply(x);
  const Vector zy = spec.apply(y);
  const Scalar nx = lp_norm(zx, spec.p());
  const Scalar ny = lp_norm(zy, spec.p());
  if (nx == Scalar(0)) return Scalar(0);
  if (ny == Scalar(0)) return nx;
  const auto quotient = [&](Scalar h) { return (lp_norm(Vector(zy + h * zx), spec.p()) - ny) / h; };
  // The quotient is analytic in h within min |y_i / x_i|; start well inside that radius.
  const Scalar h_default = Scalar(1e-2) * std::max(Scalar(1), ny / nx);
  // For l_inf the kinks sit where two moduli cross instead.
  Scalar radius = std::numeric_limits<Scalar>::infinity();
  if (spec.is_linf()) {
    for (Index i = 0; i < zy.size(); ++i) {
      for (Index j = 0; j < zy.size(); ++j) {
        for (Scalar s : {Scalar(1), Scalar(-1)}) {
          const Scalar num = s * zy(j) - zy(i);
          const Scalar den = zx(i) - s * zx(j);
          if (i != j && num != Scalar(0) && den != Scalar(0) && num / den > Scalar(0)) {
            radius = std::min(radius, num / den);
          }
        }
      }
    }
  } else {
    for (Index i = 0; i < zy.size(); ++i) {
      if (zy(i) != Scalar(0) && zx(i) != Scalar(0)) radius = std::min(radius, abs(zy(i) / zx(i)));
    }
  }
  // Below h_min the quotient is dominated by roundoff.
  const Scalar h_min = Scalar(1e-6) * h_default;
  Scalar h = std::max(std::min(h_default, Scalar(0.0625) * radius), Scalar(16) * h_min);

  // Richardson tableau on h, h/2, h/4, ... keeping the entry with the smallest
  // error estimate. The first rows can plateau by accident, so they are never accepted.
  constexpr int kLevels = 16;
  constexpr int kMinRows = 3;
  std::array<std::array<Scalar, kLevels>, kLevels> a{};
  a[0][0] = quotient(h);
  Scalar best = a[0][0];
  Scalar best_err = std::numeric_limits<Scalar>::infinity();
  for (int i = 1; i < kLevels && h / Scalar(2) >= h_min; ++i) {
    h /= Scalar(2);
    a[i][0] = quotient(h);
    Scalar factor = Scalar(2);
    for (int j = 1; j <= i; ++j) {
      a[i][j] = (factor * a[i][j - 1] - a[i - 1][j - 1]) / (factor - Scalar(1));
      factor *= Scalar(2);
      const Scalar err = std::max(abs(a[i][j] - a[i][j - 1]), abs(a[i][j] - a[i - 1][j - 1]));
      if (i >= kMinRows && err <= best_err) {
        best_err = err;
        best = a[i][j];
      }
    }
  }
  return best;
}

/// Deimling pairing (x, y)_+ = ||y|| lim_{h->0+} (||y + h x|| - ||y||) / h.
template <typename DX, typename DY>
typename DX::Scalar deimling_pairing(const Eigen::MatrixBase<DX>& x,
                                     const Eigen::MatrixBase<DY>& y,
                                     const BasicNormSpec<typename DX::Scalar>& spec) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  require_dim(y.size(), x.size(), "deimling pairing");
  const Vector zx = spec.apply(x);
  const Vector zy = spec.apply(y);
  if (spec.is_l1()) return detail::deimling_l1<Scalar>(zx, zy);
  if (spec.is_linf()) return detail::deimling_linf<Scalar>(zx, zy);
  return detail::gateaux<Scalar>(zx, zy, spec.p());
}

template <typename DX, typename DY>
typename DX::Scalar single_index_pairing(const Eigen::MatrixBase<DX>& x,
                                         const Eigen::MatrixBase<DY>& y,
                                         const BasicNormSpec<typename DX::Scalar>& spec,
                                         const IndexChoice& choice = smallest_index) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (!spec.is_linf()) throw PairingError("single-index pairing requires p = inf");
  require_dim(y.size(), x.size(), "single-index pairing");
  const Vector zx = spec.apply(x);
  const Vector zy = spec.apply(y);
  const std::vector<Index> set = inf_index_set(zy);
  const Index i = choice(std::span<const Index>(set));
  if (std::find(set.begin(), set.end(), i) == set.end()) {
    throw PairingError("index choice rule returned an index outside I_inf(y)");
  }
  return zx(i) * zy(i);
}

template <typename DX, typename DY>
typename DX::Scalar weak_pairing(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                                 const BasicNormSpec<typename DX::Scalar>& spec,
                                 const PairingKind& kind) {
  using Scalar = typename DX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (!compatible(kind, spec)) {
    throw PairingError(std::string("pairing ") + to_string(kind.variant) +
                       " is incompatible with the norm exponent");
  }
  require_dim(y.size(), x.size(), "weak pairing");
  switch (kind.variant) {
    case PairingVariant::single_index: return single_index_pairing(x, y, spec, kind.choice);
    case PairingVariant::deimling_numeric:
      return norm(y, spec) * directional_norm_derivative(x, y, spec);
    default: break;
  }
  const Vector zx = spec.apply(x);
  const Vector zy = spec.apply(y);
  switch (kind.variant) {
    case PairingVariant::gateaux_lp: return detail::gateaux<Scalar>(zx, zy, spec.p());
    case PairingVariant::sign_l1: return detail::sign_pairing<Scalar>(zx, zy);
    case PairingVariant::max_linf: return detail::max_pairing<Scalar>(zx, zy);
    case PairingVariant::deimling_l1_closed: return detail::deimling_l1<Scalar>(zx, zy);
    default: break;
  }
  throw PairingError("unhandled pairing variant");
}

template <typename Scalar>
struct BasicPairingValue {
  Scalar value;
  PairingKind kind;
  BasicNormSpec<Scalar> spec;
};

using PairingValue = BasicPairingValue<double>;

template <typename DX, typename DY>
BasicPairingValue<typename DX::Scalar> evaluate_pairing(
    const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
    const BasicNormSpec<typename DX::Scalar>& spec, const PairingKind& kind) {
  return {weak_pairing(x, y, spec, kind), kind, spec};
}

template <typename Scalar>
struct BasicCurveSample {
  Scalar t;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xdot;
};

using CurveSample = BasicCurveSample<double>;

/// Residuals | ||x|| D+_h ||x|| - [[xdot, x]] | at each sample but the last, with D+_h a
/// forward difference. The formula holds almost everywhere, so callers assert on a median.
template <typename Scalar>
std::vector<Scalar> curve_norm_derivative_check(const std::vector<BasicCurveSample<Scalar>>& curve,
                                                const BasicNormSpec<Scalar>& spec,
                                                const PairingKind& kind) {
  using std::abs;
  if (curve.size() < 3) throw std::invalid_argument("curve check needs at least 3 samples");
  std::vector<Scalar> residuals;
  residuals.reserve(curve.size() - 1);
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    const Scalar h = curve[k + 1].t - curve[k].t;
    const Scalar nk = norm(curve[k].x, spec);
    const Scalar dplus = (norm(curve[k + 1].x, spec) - nk) / h;
    residuals.push_back(abs(nk * dplus - weak_pairing(curve[k].xdot, curve[k].x, spec, kind)));
  }
  return residuals;
}

template <typename Scalar>
Scalar median(std::vector<Scalar> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace contraction
