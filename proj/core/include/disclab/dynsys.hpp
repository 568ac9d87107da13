#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "disclab/trajectory.hpp"

namespace disclab::dynsys {

using ParamMap = std::map<std::string, double>;

/// Right-hand-side definition of an ODE (or a semidiscretized PDE) with named
/// parameters. `rhs_fn` must be a pure function of (t, state, params):
/// identical inputs produce bit-identical outputs.
struct SystemSpec {
  std::string name;
  Eigen::Index dimension = 0;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const ParamMap&)>
      rhs_fn;
  ParamMap params;
  std::vector<std::string> state_labels;

  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& state) const {
    return rhs_fn(t, state, params);
  }
};

/// Gaussian measurement noise, sized as a percentage of each column's sample
/// standard deviation. level_percent = 0 is an exact no-op.
struct NoiseSpec {
  double level_percent = 0.0;
  std::uint64_t seed = 0;
};

struct Smoothing {
  enum class Kind { none, local_poly };
  Kind kind = Kind::none;
  int window = 11;  // odd
  int degree = 3;

  static Smoothing none() { return {}; }
  static Smoothing local_poly(int window = 11, int degree = 3) {
    return {Kind::local_poly, window, degree};
  }
};

enum class Variant { approximate, truth };

/// A fully parameterized benchmark problem: the system plus the initial
/// condition and sampling grid it is meant to be run with.
struct BenchmarkSetup {
  SystemSpec system;
  Eigen::VectorXd x0;
  double t0 = 0.0;
  double tf = 0.0;
  double dt = 0.0;
};

/// Integrates `system` from x0 over t_span and samples the solution on the
/// uniform grid t0, t0+dt, ..., tf (m = round((tf-t0)/dt)+1 rows). Uses an
/// adaptive embedded Runge-Kutta 5(4) scheme with absolute and relative
/// tolerance 1e-9 and polynomial dense output, so solver error is far below
/// the model discrepancies studied here. Throws IntegrationDiverged when any
/// state magnitude exceeds 1e8 or the step size underflows.
TrajectoryMatrix simulate(const SystemSpec& system, const Eigen::VectorXd& x0,
                          std::pair<double, double> t_span, double dt);

/// Builds one of the benchmark systems:
///   vanderpol  n=2,  mu (1-x^2) v - x, true variant adds -eps x^3 to dv/dt
///   lorenz     n=3,  sigma=10 rho=28 beta=8/3, true variant adds +eps x^3 to dx/dt
///   burgers    n=256, viscous Burgers on x in [-8,8) periodic, method of
///              lines, true variant adds -eps u^3 to du/dt
/// `overrides` may replace named parameters (e.g. {"mu", 3.0}).
/// Throws UnknownSystem for unrecognized names.
BenchmarkSetup make_benchmark(const std::string& name, Variant variant,
                              double epsilon, const ParamMap& overrides = {});

/// Perturbs each column with iid Gaussian noise of standard deviation
/// (level_percent/100) x that column's sample std. Same seed, same bytes.
TrajectoryMatrix add_noise(const TrajectoryMatrix& clean, const NoiseSpec& spec);

/// dX/dt on the trajectory's own grid. Interior points use 4th-order central
/// differences, the first/last points one-sided 2nd-order stencils (their
/// immediate neighbors fall back to 2nd-order central). With local_poly
/// smoothing the values are first run through a moving local least-squares
/// polynomial fit and then differentiated. Throws WindowTooLarge when the
/// smoothing window does not fit the series.
TrajectoryMatrix differentiate(const TrajectoryMatrix& traj,
                               const Smoothing& smoothing = Smoothing::none());

}  // namespace disclab::dynsys
