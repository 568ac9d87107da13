#include "disclab/dmd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "disclab/errors.hpp"

namespace disclab::dmd {
namespace {

using Cplx = std::complex<double>;

// Guard for exp(omega tau): reject parameter vectors that would overflow.
constexpr double kMaxExponent = 300.0;

Eigen::MatrixXcd exponential_basis(const Eigen::VectorXcd& omega,
                                   const Eigen::VectorXd& tau) {
  Eigen::MatrixXcd t(tau.size(), omega.size());
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    for (Eigen::Index k = 0; k < tau.size(); ++k) {
      t(k, i) = std::exp(omega[i] * tau[k]);
    }
  }
  return t;
}

bool exponent_in_range(const Eigen::VectorXcd& omega, double tau_max) {
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    if (std::abs(omega[i].real()) * tau_max > kMaxExponent) return false;
  }
  return true;
}

// Residual of the variable-projection objective at fixed omega: solve the
// linear coefficients by least squares, return the projected residual.
struct VarproState {
  Eigen::MatrixXcd basis;   // K x r
  Eigen::MatrixXcd coeffs;  // r x n (row i multiplies mode i)
  Eigen::MatrixXcd residual;  // K x n
  double residual_norm = 0.0;
};

VarproState varpro_eval(const Eigen::VectorXcd& omega,
                        const Eigen::VectorXd& tau,
                        const Eigen::MatrixXcd& data_rows) {
  VarproState s;
  s.basis = exponential_basis(omega, tau);
  s.coeffs = s.basis.colPivHouseholderQr().solve(data_rows);
  s.residual = data_rows - s.basis * s.coeffs;
  s.residual_norm = s.residual.norm();
  return s;
}

DmdModel model_from_varpro(const Eigen::VectorXcd& omega,
                           const Eigen::MatrixXcd& coeffs, int delays,
                           double dt, double t_start, double rel_residual) {
  DmdModel model;
  const Eigen::Index r = omega.size();
  model.omega = omega;
  model.rank = static_cast<int>(r);
  model.delays = delays;
  model.dt = dt;
  model.t_start = t_start;
  model.train_residual = rel_residual;
  model.modes.resize(coeffs.cols(), r);
  model.amplitudes.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double scale = coeffs.row(i).norm();
    model.amplitudes[i] = scale;
    model.modes.col(i) = coeffs.row(i).transpose();
    if (scale > 0) model.modes.col(i) /= scale;
  }
  return model;
}

}  // namespace

Eigen::MatrixXd hankel_embed(const TrajectoryMatrix& traj, int delays) {
  if (delays < 1) throw std::invalid_argument("hankel_embed: delays must be >= 1");
  const Eigen::Index m = traj.samples();
  const Eigen::Index n = traj.dim();
  if (m <= delays) throw TooFewSnapshots("hankel_embed: need more samples than delays");

  const Eigen::Index cols = m - delays + 1;
  Eigen::MatrixXd h(Eigen::Index(delays) * n, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    for (Eigen::Index j = 0; j < delays; ++j) {
      h.block(j * n, k, n, 1) = traj.values.row(k + j).transpose();
    }
  }
  return h;
}

int choose_rank(const Eigen::VectorXd& singular_values, double energy,
                int cap, double rel_floor) {
  if (singular_values.size() == 0) return 0;
  const double total = singular_values.squaredNorm();
  if (!(total > 0) || singular_values[0] < 1e-300) return 0;
  double acc = 0.0;
  int r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values[i] < rel_floor * singular_values[0]) break;
    acc += singular_values[i] * singular_values[i];
    r = static_cast<int>(i) + 1;
    if (acc >= energy * total) break;
  }
  return std::min(r, cap);
}

DmdModel exact_dmd(const Eigen::MatrixXd& snapshots_x,
                   const Eigen::MatrixXd& snapshots_xprime, int rank,
                   double dt) {
  if (snapshots_x.rows() != snapshots_xprime.rows() ||
      snapshots_x.cols() != snapshots_xprime.cols()) {
    throw DimensionMismatch("exact_dmd: snapshot pair shape mismatch");
  }
  if (rank < 1) throw std::invalid_argument("exact_dmd: rank must be >= 1");
  if (!(dt > 0)) throw std::invalid_argument("exact_dmd: dt must be positive");
  if (snapshots_x.cols() < rank) {
    throw TooFewSnapshots("exact_dmd: fewer snapshot pairs than rank");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(snapshots_x,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (rank > sv.size() || sv[rank - 1] < 1e-12 * sv[0]) {
    throw SingularTruncation("exact_dmd: singular value below 1e-12*sigma_1 at rank " +
                             std::to_string(rank));
  }

  const Eigen::MatrixXd u_r = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd v_r = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd s_r = sv.head(rank);

  const Eigen::MatrixXd xv_sinv =
      snapshots_xprime * v_r * s_r.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd a_tilde = u_r.transpose() * xv_sinv;

  Eigen::EigenSolver<Eigen::MatrixXd> eig(a_tilde);
  const Eigen::VectorXcd lambda = eig.eigenvalues();
  const Eigen::MatrixXcd w = eig.eigenvectors();
  const Eigen::MatrixXcd phi_full = xv_sinv.cast<Cplx>() * w;

  // Drop eigenvalues at numerical zero (no continuous-time counterpart).
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) >= 1e-12) keep.push_back(i);
  }

  DmdModel model;
  model.rank = static_cast<int>(keep.size());
  model.dt = dt;
  model.delays = 1;
  model.modes.resize(snapshots_x.rows(), model.rank);
  model.omega.resize(model.rank);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    model.modes.col(i) = phi_full.col(keep[k]);
    model.omega[i] = std::log(lambda[keep[k]]) / dt;
  }

  const Eigen::VectorXcd x1 = snapshots_x.col(0).cast<Cplx>();
  if (model.rank > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> psvd(
        model.modes, Eigen::ComputeThinU | Eigen::ComputeThinV);
    model.amplitudes = psvd.solve(x1);
  } else {
    model.amplitudes.resize(0);
  }

  // Fit residual over the full snapshot sequence [x_0 .. x_K].
  const Eigen::Index k_pairs = snapshots_x.cols();
  Eigen::MatrixXcd recon(snapshots_x.rows(), k_pairs + 1);
  for (Eigen::Index k = 0; k <= k_pairs; ++k) {
    Eigen::VectorXcd weights(model.rank);
    for (Eigen::Index i = 0; i < model.rank; ++i) {
      weights[i] = std::exp(model.omega[i] * (double(k) * dt)) * model.amplitudes[i];
    }
    recon.col(k) = model.modes * weights;
  }
  Eigen::MatrixXd data(snapshots_x.rows(), k_pairs + 1);
  data.leftCols(k_pairs) = snapshots_x;
  data.col(k_pairs) = snapshots_xprime.col(k_pairs - 1);
  const double data_norm = data.norm();
  model.train_residual =
      data_norm > 0 ? (recon - data.cast<Cplx>()).norm() / data_norm : 0.0;
  return model;
}

DmdModel optimized_dmd(const Eigen::MatrixXd& snapshots,
                       const Eigen::VectorXd& times, int rank,
                       const DmdModel& init, int max_iter, double tol) {
  if (snapshots.cols() != times.size()) {
    throw DimensionMismatch("optimized_dmd: snapshot/time count mismatch");
  }
  if (init.omega.size() != rank) {
    throw DimensionMismatch("optimized_dmd: init must provide `rank` eigenvalues");
  }
  if (rank == 0) return init;

  const Eigen::Index k_samples = snapshots.cols();
  const Eigen::Index n = snapshots.rows();
  const Eigen::VectorXd tau = times.array() - times[0];
  const double tau_max = tau[k_samples - 1];
  const Eigen::MatrixXcd data_rows = snapshots.transpose().cast<Cplx>();
  const double data_norm = data_rows.norm();

  // Clamp untrustworthy init growth rates (spurious noise-floor modes from
  // exact DMD can carry |Re(omega)| far beyond anything a bounded signal
  // supports); the nonlinear iteration is free to move them afterwards.
  Eigen::VectorXcd omega = init.omega;
  const double re_cap = kMaxExponent / std::max(tau_max, 1e-12);
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    omega[i] = Cplx(std::clamp(omega[i].real(), -re_cap, re_cap),
                    omega[i].imag());
  }

  // Residual of the init model as handed to us (its own modes/amplitudes).
  double init_residual = 0.0;
  {
    Eigen::MatrixXcd recon(k_samples, n);
    for (Eigen::Index k = 0; k < k_samples; ++k) {
      Eigen::VectorXcd w(init.omega.size());
      for (Eigen::Index i = 0; i < init.omega.size(); ++i) {
        w[i] = std::exp(init.omega[i] * tau[k]) * init.amplitudes[i];
      }
      recon.row(k) = (init.modes * w).transpose();
    }
    init_residual = (recon - data_rows).norm();
  }

  VarproState state = varpro_eval(omega, tau, data_rows);

  double damping = 1e-2;
  const Eigen::Index r = rank;

  for (int iter = 0; iter < max_iter; ++iter) {
    const double res_before = state.residual_norm;
    // Kaufman approximation of the variable-projection Jacobian. With
    // u_i = tau .* basis_i and P the projector onto the basis column space,
    // d(residual)/d(omega_i) ~ -(I - P) u_i coeffs_i. All Gram blocks reduce
    // to rank-one contractions, so the Jacobian is never materialized.
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(state.basis);
    const Eigen::MatrixXcd q_thin =
        qr.householderQ() * Eigen::MatrixXcd::Identity(k_samples, r);

    Eigen::MatrixXcd u(k_samples, r);
    for (Eigen::Index i = 0; i < r; ++i) {
      u.col(i) = tau.array().cast<Cplx>() * state.basis.col(i).array();
    }
    const Eigen::MatrixXcd uhu = u.adjoint() * u;                  // r x r
    const Eigen::MatrixXcd qhu = q_thin.adjoint() * u;             // r x r
    const Eigen::MatrixXcd bbh = state.coeffs.conjugate() * state.coeffs.transpose();
    const Eigen::MatrixXcd uhr = u.adjoint() * state.residual;     // r x n

    Eigen::MatrixXcd s(r, r);  // <D_i, D_j> with D_i = -(I-P) u_i coeffs_i
    Eigen::VectorXcd g(r);     // <D_i, residual>
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < r; ++j) {
        const Cplx u_proj = uhu(i, j) - qhu.col(i).dot(qhu.col(j));
        s(i, j) = u_proj * bbh(i, j);
      }
      Cplx acc(0, 0);
      for (Eigen::Index c = 0; c < n; ++c) {
        acc += std::conj(state.coeffs(i, c)) * uhr(i, c);
      }
      g[i] = -acc;
    }

    Eigen::MatrixXd h(2 * r, 2 * r);
    Eigen::VectorXd rhs(2 * r);
    for (Eigen::Index i = 0; i < r; ++i) {
      rhs[i] = -g[i].real();
      rhs[r + i] = -g[i].imag();
      for (Eigen::Index j = 0; j < r; ++j) {
        h(i, j) = s(i, j).real();
        h(i, r + j) = -s(i, j).imag();
        h(r + i, j) = s(i, j).imag();
        h(r + i, r + j) = s(i, j).real();
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      Eigen::MatrixXd h_damped = h;
      for (Eigen::Index i = 0; i < 2 * r; ++i) {
        h_damped(i, i) += damping * std::max(h(i, i), 1e-14);
      }
      const Eigen::VectorXd delta = h_damped.ldlt().solve(rhs);
      if (!delta.allFinite()) {
        damping *= 2.0;
        continue;
      }
      Eigen::VectorXcd trial = omega;
      for (Eigen::Index i = 0; i < r; ++i) {
        trial[i] += Cplx(delta[i], delta[r + i]);
      }
      if (!exponent_in_range(trial, tau_max)) {
        damping *= 2.0;
        continue;
      }
      VarproState trial_state = varpro_eval(trial, tau, data_rows);
      if (trial_state.residual_norm < state.residual_norm) {
        omega = trial;
        state = std::move(trial_state);
        damping = std::max(damping * 0.5, 1e-12);
        stepped = true;
        break;
      }
      damping *= 2.0;
      if (damping > 1e12) break;
    }
    if (!stepped) break;
    // Converged once a successful step stops moving the residual.
    if (res_before - state.residual_norm <
        tol * std::max(res_before, 1e-300)) {
      break;
    }
  }

  if (state.residual_norm >= init_residual) {
    DmdModel fallback = init;
    fallback.descended = false;
    return fallback;
  }

  DmdModel model = model_from_varpro(
      omega, state.coeffs, init.delays, init.dt, times[0],
      data_norm > 0 ? state.residual_norm / data_norm : 0.0);
  return model;
}

Eigen::MatrixXd dmd_forecast(const DmdModel& model, const Eigen::VectorXd& times,
                             double* imag_magnitude) {
  const Eigen::Index n = model.state_dim();
  Eigen::MatrixXd out(times.size(), n);
  double worst_imag = 0.0;
  Eigen::VectorXcd weights(model.rank);
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const double tau = times[k] - model.t_start;
    for (Eigen::Index i = 0; i < model.rank; ++i) {
      weights[i] = std::exp(model.omega[i] * tau) * model.amplitudes[i];
    }
    const Eigen::VectorXcd full =
        model.rank > 0 ? (model.modes.topRows(n) * weights).eval()
                       : Eigen::VectorXcd::Zero(n).eval();
    out.row(k) = full.real().transpose();
    if (model.rank > 0) {
      worst_imag = std::max(worst_imag, full.imag().cwiseAbs().maxCoeff());
    }
  }
  if (imag_magnitude) *imag_magnitude = worst_imag;
  return out;
}

Eigen::VectorXd dmd_forecast_at(const DmdModel& model, double t) {
  const Eigen::Index n = model.state_dim();
  if (model.rank == 0) return Eigen::VectorXd::Zero(n);
  const double tau = t - model.t_start;
  Eigen::VectorXcd weights(model.rank);
  for (Eigen::Index i = 0; i < model.rank; ++i) {
    weights[i] = std::exp(model.omega[i] * tau) * model.amplitudes[i];
  }
  return (model.modes.topRows(n) * weights).real();
}

int default_delays(Eigen::Index samples, Eigen::Index dim) {
  if (dim > 3) return 1;  // spatially rich snapshots need no lifting
  // Low-dimensional signals are lifted with a window long enough to resolve
  // slow oscillations (roughly a fifth of the series, capped).
  auto q = static_cast<int>(std::min<Eigen::Index>(512, samples / 5));
  q = std::max(q, 32);
  q = std::min<int>(q, static_cast<int>((samples - 2) / 2));
  return std::max(q, 1);
}

DmdModel fit_trajectory(const TrajectoryMatrix& signal,
                        const TrajectoryFitOptions& options) {
  const Eigen::Index n = signal.dim();
  const int delays = options.delays > 0
                         ? options.delays
                         : default_delays(signal.samples(), n);
  if (signal.samples() <= delays + 1) {
    throw TooFewSnapshots("fit_trajectory: trajectory shorter than delay depth");
  }

  const Eigen::MatrixXd lifted = hankel_embed(signal, delays);
  const Eigen::Index cols = lifted.cols();
  const Eigen::MatrixXd x = lifted.leftCols(cols - 1);
  const Eigen::MatrixXd xp = lifted.rightCols(cols - 1);

  int rank = options.rank;
  if (rank <= 0) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x);
    rank = choose_rank(svd.singularValues(), options.energy, options.rank_cap,
                       options.sv_floor);
  }
  if (rank == 0) {
    // Numerically zero signal: an empty model forecasting zeros.
    DmdModel model;
    model.modes.resize(lifted.rows(), 0);
    model.omega.resize(0);
    model.amplitudes.resize(0);
    model.delays = delays;
    model.dt = signal.dt();
    model.t_start = signal.times[0];
    return model;
  }

  DmdModel exact = exact_dmd(x, xp, rank, signal.dt());
  exact.delays = delays;
  exact.t_start = signal.times[0];

  const Eigen::VectorXd col_times = signal.times.head(cols);
  DmdModel refined = optimized_dmd(lifted, col_times, exact.rank, exact,
                                   options.opt_max_iter, options.opt_tol);
  return refined;
}

}  // namespace disclab::dmd
