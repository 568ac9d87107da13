#include "disclab/eval.hpp"

#include <cmath>

#include "disclab/errors.hpp"

namespace disclab::eval {
namespace {

std::pair<Eigen::Index, Eigen::Index> region_rows(const TrajectoryMatrix& a,
                                                  const Interval& region) {
  const double h = a.dt();
  const double tol = 0.25 * h;
  Eigen::Index first = 0;
  while (first < a.samples() &&
         (a.times[first] < region.lo - tol ||
          (region.open_lo && a.times[first] <= region.lo + tol))) {
    ++first;
  }
  Eigen::Index last = a.samples() - 1;
  while (last >= 0 && a.times[last] > region.hi + tol) --last;
  if (first > last) throw EmptyRegion("no samples in metric region");
  return {first, last};
}

}  // namespace

double PhaseClock::total() const {
  double acc = 0.0;
  for (const auto& [_, s] : seconds_) acc += s;
  return acc;
}

double rmse(const TrajectoryMatrix& a, const TrajectoryMatrix& b,
            const Interval& region) {
  if (!a.same_grid(b) || a.dim() != b.dim()) {
    throw GridMismatch("rmse: trajectories must share the grid and dimension");
  }
  const auto [first, last] = region_rows(a, region);
  const Eigen::Index rows = last - first + 1;
  const double sq = (a.values.middleRows(first, rows) -
                     b.values.middleRows(first, rows))
                        .squaredNorm();
  return std::sqrt(sq / double(rows * a.dim()));
}

Eigen::VectorXd rmse_per_component(const TrajectoryMatrix& a,
                                   const TrajectoryMatrix& b,
                                   const Interval& region) {
  if (!a.same_grid(b) || a.dim() != b.dim()) {
    throw GridMismatch("rmse: trajectories must share the grid and dimension");
  }
  const auto [first, last] = region_rows(a, region);
  const Eigen::Index rows = last - first + 1;
  Eigen::VectorXd out(a.dim());
  for (Eigen::Index c = 0; c < a.dim(); ++c) {
    const double sq = (a.values.col(c).segment(first, rows) -
                       b.values.col(c).segment(first, rows))
                          .squaredNorm();
    out[c] = std::sqrt(sq / double(rows));
  }
  return out;
}

double pct_accuracy_increase(double rmse_aug, double rmse_approx) {
  if (!(rmse_approx > 0)) {
    throw DivisionByZeroRmse("approximate solution is already exact");
  }
  return 100.0 * (rmse_approx - rmse_aug) / rmse_approx;
}

std::vector<std::pair<double, double>> windowed_rmse_curve(
    const TrajectoryMatrix& truth, const TrajectoryMatrix& approx,
    const TrajectoryMatrix& augmented, double t_split,
    const std::vector<double>& horizons) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(horizons.size());
  for (double h : horizons) {
    const auto region = Interval::left_open(t_split, t_split + h);
    const double ra = rmse(approx, truth, region);
    const double rg = rmse(augmented, truth, region);
    curve.emplace_back(h, pct_accuracy_increase(rg, ra));
  }
  return curve;
}

std::vector<double> default_horizons(double forecast_span, double step) {
  std::vector<double> horizons;
  for (double h = step; h <= forecast_span + 1e-9; h += step) {
    horizons.push_back(std::min(h, forecast_span));
  }
  if (horizons.empty() || horizons.back() < forecast_span - 1e-9) {
    horizons.push_back(forecast_span);
  }
  return horizons;
}

}  // namespace disclab::eval
