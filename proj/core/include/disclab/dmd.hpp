#pragma once

#include <Eigen/Dense>

#include "disclab/trajectory.hpp"

namespace disclab::dmd {

/// Fitted DMD model: x(t) ~ Phi exp(omega (t - t_start)) b on the (possibly
/// delay-lifted) state. `delays` records the Hankel depth used so forecasts
/// can un-lift back to the original state dimension.
struct DmdModel {
  Eigen::MatrixXcd modes;       // n_lifted x r
  Eigen::VectorXcd omega;       // continuous-time eigenvalues, 1/seconds
  Eigen::VectorXcd amplitudes;  // b
  int rank = 0;
  int delays = 1;
  double dt = 0.0;
  double t_start = 0.0;   // absolute time of the first training snapshot
  bool descended = true;  // false when optimization could not beat its init
  double train_residual = 0.0;  // relative Frobenius residual on the fit data

  Eigen::Index lifted_dim() const { return modes.rows(); }
  Eigen::Index state_dim() const {
    return delays > 0 ? modes.rows() / delays : modes.rows();
  }
};

/// Hankel time-delay lifting: column k stacks snapshots k..k+delays-1, giving
/// a (delays*n) x (m-delays+1) matrix. delays = 1 is the plain (transposed)
/// snapshot matrix. Throws TooFewSnapshots when m <= delays.
Eigen::MatrixXd hankel_embed(const TrajectoryMatrix& traj, int delays);

/// Smallest rank capturing `energy` of the squared singular values, skipping
/// singular values below rel_floor * sigma_1 and capped at `cap`. Returns 0
/// for numerically zero data.
int choose_rank(const Eigen::VectorXd& singular_values, double energy = 1.0,
                int cap = 30, double rel_floor = 1e-6);

/// Exact DMD on a snapshot pair (X' is X shifted one step forward):
/// rank-r SVD of X, reduced operator U_r^T X' V_r S_r^-1, its
/// eigendecomposition, exact modes X' V_r S_r^-1 W, omega = log(lambda)/dt,
/// amplitudes from the first snapshot. Eigenvalues with |lambda| < 1e-12 are
/// dropped. Throws SingularTruncation when sigma_r < 1e-12 sigma_1.
DmdModel exact_dmd(const Eigen::MatrixXd& snapshots_x,
                   const Eigen::MatrixXd& snapshots_xprime, int rank,
                   double dt);

/// Optimized DMD: nonlinear least-squares exponential fit of the snapshot
/// matrix (columns at `times`), minimizing over omega with the linear factor
/// eliminated by least squares at every step (variable projection). The
/// nonlinear step is Levenberg-Marquardt on the stacked real/imaginary parts
/// of omega. Falls back to `init` (descended = false) when no step reduces
/// the residual, so the returned residual never exceeds the initial one.
DmdModel optimized_dmd(const Eigen::MatrixXd& snapshots,
                       const Eigen::VectorXd& times, int rank,
                       const DmdModel& init, int max_iter = 100,
                       double tol = 1e-8);

/// Evaluates Phi exp(omega (t - t_start)) b at each requested absolute time,
/// un-lifts to the first n rows and returns the real part. The largest
/// imaginary magnitude encountered is reported through `imag_magnitude`
/// when non-null (conjugate-symmetric models stay at rounding level).
Eigen::MatrixXd dmd_forecast(const DmdModel& model, const Eigen::VectorXd& times,
                             double* imag_magnitude = nullptr);

/// Single-time forecast of the un-lifted state (used inside ODE right-hand
/// sides, so it avoids temporaries where it can).
Eigen::VectorXd dmd_forecast_at(const DmdModel& model, double t);

/// Convenience pipeline used by the discrepancy framework: Hankel-embed a
/// trajectory, pick the rank from singular-value energy (unless forced),
/// run exact DMD and refine it with optimized DMD.
struct TrajectoryFitOptions {
  int delays = 0;        // 0: default_delays (period-resolving window)
  int rank = 0;          // 0: singular-value floor + energy criterion
  double energy = 1.0;   // < 1 enables an energy cut on top of the floor
  double sv_floor = 1e-6;
  int rank_cap = 30;
  int opt_max_iter = 100;
  double opt_tol = 1e-8;
};
DmdModel fit_trajectory(const TrajectoryMatrix& signal,
                        const TrajectoryFitOptions& options = {});

/// Default Hankel depth: 1 for spatially rich snapshots (dim > 3), otherwise
/// about a fifth of the series (bounded to [32, 512] and the series length).
int default_delays(Eigen::Index samples, Eigen::Index dim);

}  // namespace disclab::dmd
