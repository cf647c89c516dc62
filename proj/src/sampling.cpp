#include "contraction/sampling.hpp"

#include "contraction/norm.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace contraction {

Region Region::box(Eigen::VectorXd lower, Eigen::VectorXd upper, double t0, double t1) {
  if (lower.size() == 0) throw DimensionError("region must have positive dimension");
  require_dim(upper.size(), lower.size(), "region upper bound");
  if (!((lower.array() < upper.array()).all())) {
    throw std::invalid_argument("region bounds must satisfy lower < upper componentwise");
  }
  if (!(t0 <= t1)) throw std::invalid_argument("region time interval must satisfy t0 <= t1");
  return Region{std::move(lower), std::move(upper), t0, t1};
}

Region Region::cube(int n, double half_width, double t0, double t1) {
  return box(Eigen::VectorXd::Constant(n, -half_width), Eigen::VectorXd::Constant(n, half_width), t0,
             t1);
}

bool Region::contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

namespace {

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

unsigned nth_prime(int i) {
  static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
  return primes[static_cast<std::size_t>(i) % (sizeof primes / sizeof primes[0])];
}

}  // namespace

std::vector<Eigen::VectorXd> sample_region_states(const Region& region, int count,
                                                  std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  const int n = region.dim();
  const Eigen::VectorXd width = region.upper - region.lower;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(count));

  int per_axis = static_cast<int>(std::floor(std::pow(count / 2.0, 1.0 / n) + 1e-9));
  if (per_axis >= 2) {
    std::size_t total = 1;
    for (int d = 0; d < n; ++d) total *= static_cast<std::size_t>(per_axis);
    for (std::size_t k = 0; k < total; ++k) {
      Eigen::VectorXd x(n);
      std::size_t rest = k;
      for (int d = 0; d < n; ++d) {
        const auto i = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
        rest /= static_cast<std::size_t>(per_axis);
        x(d) = i == per_axis - 1 ? region.upper(d)
                                 : region.lower(d) + width(d) * i / (per_axis - 1);
      }
      out.push_back(std::move(x));
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t remaining = static_cast<std::size_t>(count) - out.size();
  const std::size_t halton = remaining / 2;
  Eigen::VectorXd shift(n);
  for (int d = 0; d < n; ++d) shift(d) = unit(rng);
  for (std::size_t k = 0; k < halton; ++k) {
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d) {
      double h = radical_inverse(k + 1, nth_prime(d)) + shift(d);
      h -= std::floor(h);
      x(d) = region.lower(d) + width(d) * h;
    }
    out.push_back(std::move(x));
  }
  while (out.size() < static_cast<std::size_t>(count)) {
    Eigen::VectorXd x(n);
    for (int d = 0; d < n; ++d) x(d) = region.lower(d) + width(d) * unit(rng);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<double> chebyshev_times(double t0, double t1, int m) {
  if (t0 == t1 || m <= 1) return {t0};
  std::vector<double> out;
  for (int k = 0; k < m; ++k) {
    const double c = std::cos(std::numbers::pi * (2.0 * k + 1.0) / (2.0 * m));
    out.push_back(0.5 * (t0 + t1) + 0.5 * (t1 - t0) * c);
  }
  return out;
}

void parallel_blocks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t blocks =
      std::max<std::size_t>(1, std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads))));
  if (blocks == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + blocks - 1) / blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fn, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace contraction
