#include <cmath>
#include <ostream>
#include <random>

#include "disclab/discrepancy.hpp"
#include "disclab/dmd.hpp"
#include "disclab/dynsys.hpp"
#include "disclab/eval.hpp"
#include "disclab/experiment.hpp"
#include "disclab/gpr.hpp"
#include "disclab/nn.hpp"
#include "disclab/sindy.hpp"

namespace disclab::experiment {
namespace {

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

Check check_stls_recovery() {
  Check c{"stls planted 3-sparse recovery"};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index n = 3;
  sindy::LibrarySpec spec;
  const Eigen::Index p = sindy::library_size(n, spec);
  const Eigen::Index m = 10 * p;
  Eigen::MatrixXd states(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) states(i, j) = gauss(rng);
  }
  const auto lib = sindy::build_library(states, spec);
  const Eigen::Index support[3] = {2, 7, 12};
  const double coeff[3] = {0.8, -1.2, 0.5};
  Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < 3; ++k) target += coeff[k] * lib.theta.col(support[k]);
  const auto fit = sindy::stls_fit(lib.theta, target, 0.05);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    double expected = 0.0;
    for (int k = 0; k < 3; ++k) {
      if (i == support[k]) expected = coeff[k];
    }
    worst = std::max(worst, std::abs(fit.xi(i, 0) - expected));
  }
  c.ok = worst < 1e-8;
  c.detail = "max coefficient error " + std::to_string(worst);
  return c;
}

Check check_dmd_rotation() {
  Check c{"exact DMD rotation eigenvalues"};
  const double theta = 0.1, dt = 1.0;
  const int m = 60;
  Eigen::MatrixXd snaps(2, m);
  snaps.col(0) << 1.0, 0.25;
  Eigen::Matrix2d rot;
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  for (int k = 1; k < m; ++k) snaps.col(k) = rot * snaps.col(k - 1);
  const auto model = dmd::exact_dmd(snaps.leftCols(m - 1), snaps.rightCols(m - 1), 2, dt);
  double worst = 1e9;
  for (Eigen::Index i = 0; i < model.omega.size(); ++i) {
    const auto lambda = std::exp(model.omega[i] * dt);
    worst = std::min(worst, std::abs(lambda - std::polar(1.0, theta)));
  }
  c.ok = model.omega.size() == 2 && worst < 1e-8;
  c.detail = "eigenvalue distance " + std::to_string(worst);
  return c;
}

Check check_optimized_dmd() {
  Check c{"optimized DMD planted exponentials"};
  const int m = 200, n = 4, r = 2;
  Eigen::VectorXd times(m);
  for (int k = 0; k < m; ++k) times[k] = 0.05 * k;
  Eigen::VectorXcd omega(r);
  omega << std::complex<double>(-0.2, 2.0), std::complex<double>(-0.2, -2.0);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd coeffs(r, n);
  for (int j = 0; j < n; ++j) {
    const std::complex<double> z(gauss(rng), gauss(rng));
    coeffs(0, j) = z;
    coeffs(1, j) = std::conj(z);
  }
  Eigen::MatrixXd snaps(n, m);
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXcd state = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < r; ++i) {
      state += (std::exp(omega[i] * times[k]) * coeffs.row(i).transpose());
    }
    snaps.col(k) = state.real();
  }
  dmd::DmdModel init;
  init.omega = omega;
  init.omega[0] += std::complex<double>(1e-3, -1e-3);
  init.omega[1] += std::complex<double>(1e-3, 1e-3);
  init.rank = r;
  init.dt = 0.05;
  init.modes = Eigen::MatrixXcd::Zero(n, r);
  init.amplitudes = Eigen::VectorXcd::Zero(r);
  const auto fitted = dmd::optimized_dmd(snaps, times, r, init);
  double worst = 0.0;
  for (int i = 0; i < r; ++i) {
    double best = 1e9;
    for (int j = 0; j < r; ++j) best = std::min(best, std::abs(fitted.omega[j] - omega[i]));
    worst = std::max(worst, best);
  }
  c.ok = fitted.descended && worst < 1e-8;
  c.detail = "max omega error " + std::to_string(worst);
  return c;
}

Check check_gpr_gradient() {
  Check c{"GPR log-marginal-likelihood gradient vs finite differences"};
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 12, d = 2;
  Eigen::MatrixXd x(n, d);
  Eigen::MatrixXd y(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
    y(i, 0) = std::sin(x(i, 0)) + 0.3 * x(i, 1);
  }
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    gpr::Kernel kernel;
    kernel.signal_variance = std::exp(gauss(rng) * 0.5);
    kernel.length_scales = Eigen::VectorXd::Constant(d, 1.0);
    kernel.length_scales[0] = std::exp(gauss(rng) * 0.4);
    kernel.length_scales[1] = std::exp(gauss(rng) * 0.4);
    kernel.noise_variance = std::exp(-3.0 + 0.5 * gauss(rng));
    Eigen::VectorXd grad;
    gpr::log_marginal_likelihood(kernel, x, y, &grad);
    const double h = 1e-5;
    for (int p = 0; p < d + 2; ++p) {
      auto shifted = [&](double delta) {
        gpr::Kernel k = kernel;
        if (p == 0) k.signal_variance *= std::exp(delta);
        else if (p <= d) k.length_scales[p - 1] *= std::exp(delta);
        else k.noise_variance *= std::exp(delta);
        return gpr::log_marginal_likelihood(k, x, y, nullptr);
      };
      const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
      const double rel = std::abs(grad[p] - fd) /
                         std::max({std::abs(grad[p]), std::abs(fd), 1.0});
      worst = std::max(worst, rel);
    }
  }
  c.ok = worst < 1e-4;
  c.detail = "max relative gradient error " + std::to_string(worst);
  return c;
}

Check check_mlp_gradients() {
  Check c{"MLP backprop gradients vs finite differences"};
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  nn::MlpSpec spec;
  spec.layer_sizes = {3, 8, 6, 2};
  spec.l2_weight = 1e-4;
  spec.seed = 99;
  auto model = nn::mlp_init(spec);
  Eigen::MatrixXd x(6, 3), y(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = gauss(rng);
    for (int j = 0; j < 2; ++j) y(i, j) = gauss(rng);
  }
  const double err = nn::mlp_gradient_check(model, x, y);
  c.ok = err < 1e-4;
  c.detail = "max relative gradient error " + std::to_string(err);
  return c;
}

Check check_vdp_closure() {
  Check c{"Van der Pol closed-form discrepancy closure"};
  const double eps = 0.01;
  auto truth = dynsys::make_benchmark("vanderpol", dynsys::Variant::truth, eps);
  auto approx = dynsys::make_benchmark("vanderpol", dynsys::Variant::approximate, eps);
  const std::pair<double, double> span{0.0, 5.0};
  const auto true_traj = dynsys::simulate(truth.system, truth.x0, span, 0.01);
  auto g = discrepancy::DiscrepancyModel::analytic(
      discrepancy::Approach::missing_physics, [eps](const Eigen::VectorXd& s) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(2);
        d[1] = -eps * s[0] * s[0] * s[0];
        return d;
      });
  const auto aug = discrepancy::augment_missing_physics(
      approx.system, g, approx.x0, span, 0.01);
  const double err = eval::rmse(aug.x_tilde, true_traj,
                                eval::Interval::closed(0.0, 5.0));
  c.ok = err < 1e-5;
  c.detail = "closure RMSE " + std::to_string(err);
  return c;
}

Check check_differentiate_order() {
  Check c{"finite-difference interior convergence order"};
  double prev_err = 0.0;
  double worst_slope = 10.0;
  int level = 0;
  for (double dt : {0.02, 0.01, 0.005}) {
    const auto m = static_cast<Eigen::Index>(std::llround(1.0 / dt)) + 1;
    TrajectoryMatrix traj;
    traj.times.resize(m);
    traj.values.resize(m, 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      traj.times[i] = double(i) * dt;
      traj.values(i, 0) = std::sin(3.0 * traj.times[i]);
    }
    const auto deriv = dynsys::differentiate(traj);
    double err = 0.0;
    for (Eigen::Index i = 2; i < m - 2; ++i) {
      err = std::max(err, std::abs(deriv.values(i, 0) -
                                   3.0 * std::cos(3.0 * traj.times[i])));
    }
    if (level > 0) {
      worst_slope = std::min(worst_slope, std::log2(prev_err / err));
    }
    prev_err = err;
    ++level;
  }
  c.ok = worst_slope >= 3.5;
  c.detail = "convergence slope " + std::to_string(worst_slope);
  return c;
}

}  // namespace

int run_verify(std::ostream& out) {
  const Check checks[] = {
      check_stls_recovery(),     check_dmd_rotation(),
      check_optimized_dmd(),     check_gpr_gradient(),
      check_mlp_gradients(),     check_vdp_closure(),
      check_differentiate_order(),
  };
  int failures = 0;
  for (const auto& c : checks) {
    out << (c.ok ? "[ ok ] " : "[FAIL] ") << c.name << " (" << c.detail
        << ")\n";
    if (!c.ok) ++failures;
  }
  out << (failures == 0 ? "verify: all checks passed\n"
                        : "verify: " + std::to_string(failures) +
                              " check(s) failed\n");
  return failures;
}

}  // namespace disclab::experiment
