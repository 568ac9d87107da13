#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "disclab/trajectory.hpp"

namespace disclab::eval {

/// Time interval for metric evaluation. `open_lo` excludes the left endpoint
/// (the forecast region is (t_split, tf]).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool open_lo = false;

  static Interval closed(double lo, double hi) { return {lo, hi, false}; }
  static Interval left_open(double lo, double hi) { return {lo, hi, true}; }
};

/// Pooled RMSE over all samples in `region` and all state components.
/// Requires identical grids; throws EmptyRegion when no samples qualify.
double rmse(const TrajectoryMatrix& a, const TrajectoryMatrix& b,
            const Interval& region);

/// Per-component RMSE over the same region (diagnostic companion to rmse).
Eigen::VectorXd rmse_per_component(const TrajectoryMatrix& a,
                                   const TrajectoryMatrix& b,
                                   const Interval& region);

/// 100 (rmse_approx - rmse_aug) / rmse_approx: 100 is a perfect correction,
/// 0 no change, negative a degradation. Throws DivisionByZeroRmse when the
/// baseline error is zero (the solution is already exact).
double pct_accuracy_increase(double rmse_aug, double rmse_approx);

/// For each horizon h: pct_accuracy_increase over (t_split, t_split + h].
std::vector<std::pair<double, double>> windowed_rmse_curve(
    const TrajectoryMatrix& truth, const TrajectoryMatrix& approx,
    const TrajectoryMatrix& augmented, double t_split,
    const std::vector<double>& horizons);

/// Uniform horizon grid (step 0.5 s) covering a forecast span.
std::vector<double> default_horizons(double forecast_span, double step = 0.5);

/// Wall-clock accumulator keyed by phase label (monotonic clock).
class PhaseClock {
 public:
  template <class F>
  auto time(const std::string& phase, F&& thunk) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(thunk())>) {
      thunk();
      record(phase, start);
    } else {
      auto result = thunk();
      record(phase, start);
      return result;
    }
  }
  const std::map<std::string, double>& seconds() const { return seconds_; }
  double total() const;

 private:
  void record(const std::string& phase,
              std::chrono::steady_clock::time_point start) {
    const auto stop = std::chrono::steady_clock::now();
    seconds_[phase] += std::chrono::duration<double>(stop - start).count();
  }
  std::map<std::string, double> seconds_;
};

/// One-shot wall-clock measurement: (result, seconds).
template <class F>
auto timed(F&& thunk) {
  const auto start = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<decltype(thunk())>) {
    thunk();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
  } else {
    auto result = thunk();
    const auto stop = std::chrono::steady_clock::now();
    return std::make_pair(std::move(result),
                          std::chrono::duration<double>(stop - start).count());
  }
}

/// Quantitative record of one experiment cell.
struct EvaluationReport {
  double rmse_approx_recon = 0, rmse_aug_recon = 0;
  double rmse_approx_fcst = 0, rmse_aug_fcst = 0;
  double pct_accuracy_increase_recon = 0, pct_accuracy_increase_fcst = 0;
  bool already_exact_recon = false, already_exact_fcst = false;
  std::vector<std::pair<double, double>> window_curve;
  Eigen::VectorXd per_component_approx_recon, per_component_aug_recon;
  Eigen::VectorXd per_component_approx_fcst, per_component_aug_fcst;
  std::map<std::string, double> wall_clock;  // data_gen, fit, reconstruct, forecast
};

}  // namespace disclab::eval
