#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace disclab {

/// Uniformly sampled multivariate time series. Rows of `values` are time
/// samples, columns are state components. This is the data currency shared
/// by every module: simulated states, measurements, discrepancy signals and
/// their derivatives all travel as TrajectoryMatrix.
struct TrajectoryMatrix {
  Eigen::VectorXd times;           // length m, strictly increasing, uniform
  Eigen::MatrixXd values;          // m x n
  std::vector<std::string> labels; // per-column names (may be empty)

  Eigen::Index samples() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }

  /// Uniform step. Requires at least two samples.
  double dt() const;

  /// Index of the grid point closest to t; throws GridMismatch when t is
  /// farther than a quarter step from every grid point.
  Eigen::Index index_of(double t) const;

  /// Inclusive row slice [first, last].
  TrajectoryMatrix slice(Eigen::Index first, Eigen::Index last) const;

  /// All samples with t_lo <= t <= t_hi (grid-tolerant comparison).
  TrajectoryMatrix restrict_to(double t_lo, double t_hi) const;

  bool same_grid(const TrajectoryMatrix& other, double rel_tol = 1e-9) const;

  /// Checks grid uniformity (1e-12 relative) and that all values are finite.
  void validate() const;

  /// Joins head and tail; tail's first sample must continue head's grid.
  static TrajectoryMatrix concat(const TrajectoryMatrix& head,
                                 const TrajectoryMatrix& tail);
};

}  // namespace disclab
