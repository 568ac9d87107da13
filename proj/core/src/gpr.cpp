#include "disclab/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "disclab/errors.hpp"

namespace disclab::gpr {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::MatrixXd se_gram(const Kernel& kernel, const Eigen::MatrixXd& a,
                        const Eigen::MatrixXd& b) {
  const Eigen::Index na = a.rows(), nb = b.rows();
  Eigen::MatrixXd gram(na, nb);
  const Eigen::VectorXd inv2 =
      kernel.length_scales.array().square().inverse().matrix();
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double d2 =
          ((a.row(i) - b.row(j)).array().square() * inv2.transpose().array())
              .sum();
      gram(i, j) = kernel.signal_variance * std::exp(-0.5 * d2);
    }
  }
  return gram;
}

// Cholesky with escalating diagonal jitter; throws CholeskyFailed at 1e-6.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& k) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() == Eigen::Success) return llt;
  for (double jitter : {1e-10, 1e-8, 1e-6}) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw CholeskyFailed("Gram matrix not positive definite after jitter escalation");
}

struct HyperVector {
  // [log sf2, log l_1..d, log sn2]
  static Eigen::VectorXd pack(const Kernel& k) {
    Eigen::VectorXd v(k.length_scales.size() + 2);
    v[0] = std::log(k.signal_variance);
    v.segment(1, k.length_scales.size()) =
        k.length_scales.array().log().matrix();
    v[v.size() - 1] = std::log(std::max(k.noise_variance, 1e-300));
    return v;
  }
  static Kernel unpack(const Eigen::VectorXd& v) {
    Kernel k;
    k.signal_variance = std::exp(v[0]);
    k.length_scales = v.segment(1, v.size() - 2).array().exp().matrix();
    k.noise_variance = std::exp(v[v.size() - 1]);
    return k;
  }
};

void clamp_hypers(Eigen::VectorXd& v, double noise_floor) {
  for (Eigen::Index i = 0; i < v.size() - 1; ++i) {
    v[i] = std::clamp(v[i], -30.0, 30.0);
  }
  v[v.size() - 1] =
      std::clamp(v[v.size() - 1], std::log(noise_floor), 30.0);
}

}  // namespace

double log_marginal_likelihood(const Kernel& kernel, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& targets_std,
                               Eigen::VectorXd* grad) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index n_out = targets_std.cols();
  const Eigen::Index d = inputs.cols();
  if (kernel.length_scales.size() != d) {
    throw DimensionMismatch("kernel length scales do not match input dimension");
  }

  const Eigen::MatrixXd k_se = se_gram(kernel, inputs, inputs);
  Eigen::MatrixXd k = k_se;
  k.diagonal().array() += kernel.noise_variance;
  const auto llt = robust_llt(k);
  const Eigen::MatrixXd alpha = llt.solve(targets_std);

  const double log_det_half =
      llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double lml = -0.5 * (targets_std.array() * alpha.array()).sum() -
               double(n_out) * log_det_half -
               0.5 * double(n) * double(n_out) * kLog2Pi;

  if (grad) {
    // d lml / d theta_j = 1/2 tr((sum_o a_o a_o^T - n_out K^-1) dK/dtheta_j)
    const Eigen::MatrixXd k_inv =
        llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd m =
        alpha * alpha.transpose() - double(n_out) * k_inv;
    grad->resize(d + 2);
    (*grad)[0] = 0.5 * (m.array() * k_se.array()).sum();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double inv_l2 = 1.0 / (kernel.length_scales[j] * kernel.length_scales[j]);
      Eigen::MatrixXd scaled(n, n);
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
          const double diff = inputs(a, j) - inputs(b, j);
          scaled(a, b) = k_se(a, b) * diff * diff * inv_l2;
        }
      }
      (*grad)[1 + j] = 0.5 * (m.array() * scaled.array()).sum();
    }
    (*grad)[d + 1] = 0.5 * kernel.noise_variance * m.trace();
  }
  return lml;
}

Kernel default_kernel(const Eigen::MatrixXd& inputs, double noise_variance) {
  Kernel k;
  k.signal_variance = 1.0;
  k.noise_variance = noise_variance;
  k.length_scales.resize(inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    const double mean = inputs.col(j).mean();
    const double sd = std::sqrt(
        (inputs.col(j).array() - mean).square().sum() /
        double(std::max<Eigen::Index>(inputs.rows() - 1, 1)));
    k.length_scales[j] = std::max(sd, 1e-3);
  }
  return k;
}

GprModel gpr_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                 const Kernel& init, const FitOptions& options) {
  const Eigen::Index n = inputs.rows();
  const Eigen::Index n_out = targets.cols();
  if (n < 2) throw std::invalid_argument("gpr_fit: need at least two samples");
  if (targets.rows() != n) throw DimensionMismatch("gpr_fit: row mismatch");

  // Standardize targets per output (zero-mean unit-std closure).
  Eigen::VectorXd mean(n_out), sd(n_out);
  Eigen::MatrixXd y(n, n_out);
  for (Eigen::Index j = 0; j < n_out; ++j) {
    mean[j] = targets.col(j).mean();
    const double var =
        (targets.col(j).array() - mean[j]).square().sum() / double(n - 1);
    sd[j] = std::sqrt(var);
    if (sd[j] < 1e-12) sd[j] = 1.0;
    y.col(j) = (targets.col(j).array() - mean[j]) / sd[j];
  }

  std::mt19937_64 rng(options.jitter_seed);
  std::normal_distribution<double> jitter(0.0, 0.3);

  Eigen::VectorXd best_theta;
  double best_lml = -std::numeric_limits<double>::infinity();

  for (int start = 0; start < std::max(1, options.starts); ++start) {
    Eigen::VectorXd theta = HyperVector::pack(init);
    if (start > 0) {
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += jitter(rng);
    }
    clamp_hypers(theta, options.noise_floor);
    if (!options.optimize_noise) {
      theta[theta.size() - 1] = HyperVector::pack(init)[theta.size() - 1];
    }

    double lml;
    Eigen::VectorXd grad;
    try {
      lml = log_marginal_likelihood(HyperVector::unpack(theta), inputs, y, &grad);
    } catch (const CholeskyFailed&) {
      continue;
    }

    double step = options.step_init;
    for (int iter = 0; iter < options.max_iter; ++iter) {
      if (!options.optimize_noise) grad[grad.size() - 1] = 0.0;
      const double gnorm = grad.cwiseAbs().maxCoeff();
      if (gnorm < 1e-6) break;

      // Backtracking ascent along the normalized gradient direction, so the
      // step is measured in log-hyperparameter units regardless of how stiff
      // the likelihood surface is.
      const Eigen::VectorXd direction = grad / gnorm;
      bool accepted = false;
      double trial_lml = 0.0;
      Eigen::VectorXd trial;
      while (step > 1e-10) {
        trial = theta + step * direction;
        clamp_hypers(trial, options.noise_floor);
        if (!options.optimize_noise) {
          trial[trial.size() - 1] = theta[theta.size() - 1];
        }
        try {
          trial_lml = log_marginal_likelihood(HyperVector::unpack(trial),
                                              inputs, y, nullptr);
        } catch (const CholeskyFailed&) {
          step *= 0.5;
          continue;
        }
        if (std::isfinite(trial_lml) && trial_lml > lml) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;

      const double gain = trial_lml - lml;
      theta = trial;
      lml = trial_lml;
      log_marginal_likelihood(HyperVector::unpack(theta), inputs, y, &grad);
      step = std::min(step * 2.0, 1.0);
      if (gain < options.tol * std::max(1.0, std::abs(lml))) break;
    }

    if (lml > best_lml) {
      best_lml = lml;
      best_theta = theta;
    }
  }

  if (!best_theta.size()) {
    throw CholeskyFailed("gpr_fit: no hyperparameter start produced a valid model");
  }

  GprModel model;
  model.kernel = HyperVector::unpack(best_theta);
  model.train_inputs = inputs;
  model.train_targets = targets;
  model.target_mean = mean;
  model.target_std = sd;

  Eigen::MatrixXd k = se_gram(model.kernel, inputs, inputs);
  k.diagonal().array() += model.kernel.noise_variance;
  const auto llt = robust_llt(k);
  model.chol_lower = llt.matrixL();
  model.alpha = llt.solve(y);
  model.log_marginal_likelihood = best_lml;
  return model;
}

Prediction gpr_predict(const GprModel& model, const Eigen::MatrixXd& query) {
  if (query.cols() != model.train_inputs.cols()) {
    throw DimensionMismatch("gpr_predict: query dimension mismatch");
  }
  const Eigen::Index m = query.rows();
  const Eigen::Index n_out = model.alpha.cols();

  const Eigen::MatrixXd k_star = se_gram(model.kernel, query, model.train_inputs);
  Prediction out;
  out.mean = k_star * model.alpha;  // standardized space
  for (Eigen::Index j = 0; j < n_out; ++j) {
    out.mean.col(j) =
        (out.mean.col(j).array() * model.target_std[j] + model.target_mean[j])
            .matrix();
  }

  const Eigen::MatrixXd v = model.chol_lower.triangularView<Eigen::Lower>()
                                .solve(k_star.transpose());
  out.variance.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double var = model.kernel.signal_variance - v.col(i).squaredNorm();
    if (var < 0) {
      if (var < -1e-10) ++out.clamped;
      var = 0.0;
    }
    out.variance[i] = var;
  }
  return out;
}

}  // namespace disclab::gpr
