#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace disclab::gpr {

/// Anisotropic squared-exponential kernel with additive iid Gaussian noise:
/// k(x, x') = signal_variance * exp(-1/2 sum_d (x_d - x'_d)^2 / l_d^2),
/// Gram matrix K(X, X) + noise_variance * I.
struct Kernel {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;  // one per input dimension, > 0
  double noise_variance = 1e-6;
};

struct FitOptions {
  int max_iter = 80;       // gradient-ascent iterations per start
  int starts = 4;          // multi-start count; start 0 is the given init
  bool optimize_noise = true;
  double noise_floor = 1e-10;
  double step_init = 0.1;  // initial ascent step in log-hyperparameter space
  double tol = 1e-7;       // relative log-marginal-likelihood improvement
  std::uint64_t jitter_seed = 0x5eedULL;
};

/// Fitted model. Targets are standardized per output before fitting; alpha
/// and the Cholesky factor live in standardized space, predictions are
/// de-standardized on the way out.
struct GprModel {
  Kernel kernel;
  Eigen::MatrixXd train_inputs;   // N x d
  Eigen::MatrixXd train_targets;  // N x n_out, original units
  Eigen::MatrixXd alpha;          // N x n_out, (K + sn I)^-1 y_std
  Eigen::MatrixXd chol_lower;     // L with L L^T = K + sn I
  Eigen::VectorXd target_mean;
  Eigen::VectorXd target_std;
  double log_marginal_likelihood = 0.0;
};

struct Prediction {
  Eigen::MatrixXd mean;      // M x n_out, original units
  Eigen::VectorXd variance;  // M, kernel (standardized-target) units
  int clamped = 0;           // negative-variance clamps below -1e-10
};

/// Log marginal likelihood of standardized targets under `kernel`, summed
/// over output columns (shared kernel, independent alphas). When `grad` is
/// non-null it receives the analytic gradient with respect to
/// [log signal_variance, log length_scales..., log noise_variance].
/// Cholesky failures escalate diagonal jitter 1e-10 -> 1e-8 -> 1e-6 before
/// throwing CholeskyFailed.
double log_marginal_likelihood(const Kernel& kernel, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets_std,
                               Eigen::VectorXd* grad = nullptr);

/// Maximizes the log marginal likelihood over log-hyperparameters by gradient
/// ascent with backtracking, multi-started from `options.starts` jittered
/// copies of `init`; the best run wins. Targets are standardized internally.
GprModel gpr_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                 const Kernel& init, const FitOptions& options = {});

/// Posterior mean and variance: mean = K(X*,X) alpha (de-standardized),
/// variance = k(x*,x*) - |L^-1 K(X,X*)|^2 per query row, clamped at zero.
Prediction gpr_predict(const GprModel& model, const Eigen::MatrixXd& query);

/// Reasonable starting kernel: unit signal variance, per-dimension length
/// scales from the input spread, small noise.
Kernel default_kernel(const Eigen::MatrixXd& inputs,
                      double noise_variance = 1e-4);

}  // namespace disclab::gpr
