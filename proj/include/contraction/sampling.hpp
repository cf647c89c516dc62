#pragma once

// Regions of state/time space and deterministic sample designs over them.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace contraction {

/// Axis-aligned box of states with a time interval.
struct Region {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double t0 = 0.0;
  double t1 = 0.0;

  static Region box(Eigen::VectorXd lower, Eigen::VectorXd upper, double t0 = 0.0, double t1 = 0.0);
  static Region cube(int n, double half_width, double t0 = 0.0, double t1 = 0.0);

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd center() const { return (lower + upper) / 2.0; }
  bool contains(const Eigen::VectorXd& x) const;
};

/// Tensor grid with endpoints, then Halton points, then uniform random points.
/// Roughly half of `count` goes to the grid; the output has exactly `count` points.
std::vector<Eigen::VectorXd> sample_region_states(const Region& region, int count, std::uint64_t seed);

/// `m` Chebyshev nodes on [t0, t1] (a single point when t0 == t1).
std::vector<double> chebyshev_times(double t0, double t1, int m = 16);

/// Runs fn(begin, end) over `threads` contiguous blocks of [0, count).
void parallel_blocks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace contraction
