#include "disclab/discrepancy.hpp"

#include <cmath>
#include <memory>

#include "disclab/errors.hpp"
#include "disclab/eval.hpp"

namespace disclab::discrepancy {

std::string to_string(Approach a) {
  return a == Approach::missing_physics ? "missing_physics" : "residual";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::sindy: return "sindy";
    case Method::dmd: return "dmd";
    case Method::gpr: return "gpr";
    case Method::nn: return "nn";
    case Method::analytic: return "analytic";
    case Method::lookup: return "lookup";
  }
  return "unknown";
}

Approach approach_from_string(const std::string& s) {
  if (s == "missing_physics") return Approach::missing_physics;
  if (s == "residual") return Approach::residual;
  throw ConfigError("unknown approach: " + s);
}

Method method_from_string(const std::string& s) {
  if (s == "sindy") return Method::sindy;
  if (s == "dmd") return Method::dmd;
  if (s == "gpr") return Method::gpr;
  if (s == "nn") return Method::nn;
  if (s == "analytic") return Method::analytic;
  if (s == "lookup") return Method::lookup;
  throw ConfigError("unknown method: " + s);
}

// ---------------------------------------------------------------------------
// DiscrepancyModel prediction
// ---------------------------------------------------------------------------

Eigen::VectorXd DiscrepancyModel::predict_state(const Eigen::VectorXd& state) const {
  if (const auto* p = std::get_if<SindyPayload>(&payload)) {
    return sindy::sindy_predict(p->coeffs, p->library, state);
  }
  if (const auto* p = std::get_if<GprPayload>(&payload)) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(p->models.size()));
    for (std::size_t j = 0; j < p->models.size(); ++j) {
      out[static_cast<Eigen::Index>(j)] =
          gpr::gpr_predict(p->models[j], state.transpose()).mean(0, 0);
    }
    return out;
  }
  if (const auto* p = std::get_if<NnPayload>(&payload)) {
    return nn::mlp_predict_one(p->model, state);
  }
  if (const auto* p = std::get_if<AnalyticPayload>(&payload)) {
    return p->fn(state);
  }
  throw DimensionMismatch("predict_state called on a time-based model");
}

Eigen::VectorXd DiscrepancyModel::predict_time(double t) const {
  if (const auto* p = std::get_if<DmdPayload>(&payload)) {
    return dmd::dmd_forecast_at(p->model, t);
  }
  if (const auto* p = std::get_if<LookupPayload>(&payload)) {
    const auto& table = p->table;
    const double h = table.dt();
    const double k = (t - table.times[0]) / h;
    if (k <= 0) return table.values.row(0).transpose();
    if (k >= double(table.samples() - 1)) {
      return table.values.row(table.samples() - 1).transpose();
    }
    const auto lo = static_cast<Eigen::Index>(std::floor(k));
    const double w = k - double(lo);
    return ((1.0 - w) * table.values.row(lo) + w * table.values.row(lo + 1))
        .transpose();
  }
  throw DimensionMismatch("predict_time called on a state-based model");
}

Eigen::MatrixXd DiscrepancyModel::predict_batch(const Eigen::VectorXd& times,
                                                const Eigen::MatrixXd& states) const {
  if (const auto* p = std::get_if<SindyPayload>(&payload)) {
    return sindy::sindy_predict_batch(p->coeffs, p->library, states);
  }
  if (const auto* p = std::get_if<GprPayload>(&payload)) {
    Eigen::MatrixXd out(states.rows(), static_cast<Eigen::Index>(p->models.size()));
    for (std::size_t j = 0; j < p->models.size(); ++j) {
      out.col(static_cast<Eigen::Index>(j)) =
          gpr::gpr_predict(p->models[j], states).mean.col(0);
    }
    return out;
  }
  if (const auto* p = std::get_if<NnPayload>(&payload)) {
    return nn::mlp_predict(p->model, states);
  }
  if (const auto* p = std::get_if<DmdPayload>(&payload)) {
    return dmd::dmd_forecast(p->model, times);
  }
  Eigen::MatrixXd out;
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    const Eigen::VectorXd row = predict(times[i], states.row(i).transpose());
    if (i == 0) out.resize(times.size(), row.size());
    out.row(i) = row.transpose();
  }
  return out;
}

DiscrepancyModel DiscrepancyModel::analytic(
    Approach approach, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn) {
  DiscrepancyModel m;
  m.method = Method::analytic;
  m.approach = approach;
  m.payload = AnalyticPayload{std::move(fn)};
  return m;
}

DiscrepancyModel DiscrepancyModel::lookup(Approach approach, TrajectoryMatrix table) {
  DiscrepancyModel m;
  m.method = Method::lookup;
  m.approach = approach;
  m.payload = LookupPayload{std::move(table)};
  return m;
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

DiscrepancySignal compute_dynamical_error(const TrajectoryMatrix& measurements,
                                          const dynsys::SystemSpec& approx,
                                          const dynsys::Smoothing& smoothing) {
  if (measurements.dim() != approx.dimension) {
    throw DimensionMismatch("measurements do not match the system dimension");
  }
  DiscrepancySignal out;
  out.kind = SignalKind::dynamical_error;
  out.regressor_inputs = measurements;

  const TrajectoryMatrix ydot = dynsys::differentiate(measurements, smoothing);
  out.signal = ydot;
  for (Eigen::Index i = 0; i < measurements.samples(); ++i) {
    const Eigen::VectorXd f =
        approx.rhs(measurements.times[i], measurements.values.row(i).transpose());
    out.signal.values.row(i) -= f.transpose();
  }
  return out;
}

DiscrepancySignal compute_state_residual(const TrajectoryMatrix& measurements,
                                         const TrajectoryMatrix& approx_traj) {
  if (!measurements.same_grid(approx_traj) ||
      measurements.dim() != approx_traj.dim()) {
    throw GridMismatch("state residual needs identical time grids");
  }
  DiscrepancySignal out;
  out.kind = SignalKind::state_residual;
  out.regressor_inputs = approx_traj;
  out.signal = measurements;
  out.signal.values -= approx_traj.values;
  return out;
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

namespace {

double pooled_rmse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return std::sqrt((a - b).squaredNorm() / double(a.rows() * a.cols()));
}

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& data, int stride) {
  const Eigen::Index rows = (data.rows() + stride - 1) / stride;
  Eigen::MatrixXd out(rows, data.cols());
  for (Eigen::Index i = 0; i < rows; ++i) out.row(i) = data.row(i * stride);
  return out;
}

}  // namespace

DiscrepancyModel fit_discrepancy(const DiscrepancySignal& signal, Method method,
                                 const EngineOptions& options) {
  if (signal.signal.samples() == 0) {
    throw EmptyRegion("fit_discrepancy: empty signal");
  }
  DiscrepancyModel model;
  model.method = method;
  model.approach = signal.approach();

  const auto& inputs = signal.regressor_inputs;
  const auto& target = signal.signal;

  const auto [unused, seconds] = eval::timed([&]() -> int {
    switch (method) {
      case Method::sindy: {
        const sindy::Library lib = sindy::build_library(
            inputs.values, options.sindy.library, inputs.labels);
        double lambda = options.sindy.lambda;
        if (!(lambda > 0)) {
          if (signal.kind == SignalKind::dynamical_error) {
            lambda = sindy::default_threshold(lib.theta, target.values);
          } else {
            // State residuals are history dependent, not static functions of
            // the instantaneous state; a candidate library in the state is
            // structurally misspecified for them, so the default threshold
            // starts from the parsimonious null model. Pass an explicit
            // lambda to force a fit anyway.
            bool flag = false;
            const Eigen::MatrixXd ols =
                sindy::solve_ols(lib.theta, target.values, &flag);
            lambda = 1.05 * std::max(ols.cwiseAbs().maxCoeff(), 1e-12);
          }
        }
        DiscrepancyModel::SindyPayload payload;
        payload.coeffs = sindy::stls_fit(lib.theta, target.values, lambda,
                                         options.sindy.max_iter);
        payload.coeffs.term_names = lib.term_names;
        payload.library = options.sindy.library;
        model.metadata.rank_deficient = payload.coeffs.rank_deficient;
        model.metadata.training_rmse =
            pooled_rmse(lib.theta * payload.coeffs.xi, target.values);
        model.payload = std::move(payload);
        return 0;
      }
      case Method::dmd: {
        DiscrepancyModel::DmdPayload payload;
        payload.model = dmd::fit_trajectory(target, options.dmd);
        model.metadata.descended = payload.model.descended;
        model.metadata.training_rmse = pooled_rmse(
            dmd::dmd_forecast(payload.model, target.times), target.values);
        model.payload = std::move(payload);
        return 0;
      }
      case Method::gpr: {
        // One independent GP per output column: sharing a kernel across
        // outputs with very different signal-to-noise (a near-zero
        // discrepancy component next to a structured one) drags every
        // output's hyperparameters to a compromise that fits none of them.
        const int stride = std::max(1, options.gpr.stride);
        const Eigen::MatrixXd x = subsample_rows(inputs.values, stride);
        const Eigen::MatrixXd y = subsample_rows(target.values, stride);
        DiscrepancyModel::GprPayload payload;
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
          gpr::Kernel init =
              gpr::default_kernel(x, options.gpr.init_noise_variance);
          auto fit = options.gpr.fit;
          fit.jitter_seed = options.gpr.fit.jitter_seed + std::uint64_t(j);
          payload.models.push_back(gpr::gpr_fit(x, y.col(j), init, fit));
        }
        Eigen::MatrixXd pred(inputs.values.rows(), y.cols());
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
          pred.col(j) =
              gpr::gpr_predict(payload.models[j], inputs.values).mean.col(0);
        }
        model.metadata.training_rmse = pooled_rmse(pred, target.values);
        model.payload = std::move(payload);
        return 0;
      }
      case Method::nn: {
        nn::MlpSpec spec;
        spec.layer_sizes.push_back(static_cast<int>(inputs.dim()));
        for (int wdt : options.nn.hidden) spec.layer_sizes.push_back(wdt);
        spec.layer_sizes.push_back(static_cast<int>(target.dim()));
        spec.l2_weight = options.nn.l2;
        spec.seed = options.nn.seed;
        DiscrepancyModel::NnPayload payload;
        const int batch = static_cast<int>(
            std::min<Eigen::Index>(options.nn.batch, inputs.samples()));
        payload.model = nn::mlp_fit(inputs.values, target.values, spec,
                                    options.nn.epochs, batch, options.nn.lr);
        model.metadata.training_rmse = pooled_rmse(
            nn::mlp_predict(payload.model, inputs.values), target.values);
        model.payload = std::move(payload);
        return 0;
      }
      default:
        throw ConfigError("fit_discrepancy: oracle methods are constructed, not fitted");
    }
  });
  static_cast<void>(unused);
  model.metadata.fit_seconds = seconds;
  return model;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

AugmentedSolution augment_missing_physics(const dynsys::SystemSpec& approx,
                                          const DiscrepancyModel& g,
                                          const Eigen::VectorXd& x0,
                                          std::pair<double, double> t_span,
                                          double dt,
                                          std::optional<double> t_split) {
  if (g.approach != Approach::missing_physics) {
    throw ApproachMismatch("model was fitted for the residual approach");
  }
  // One probe evaluation validates the prediction dimension up front.
  const Eigen::VectorXd probe = g.predict(t_span.first, x0);
  if (probe.size() != approx.dimension) {
    throw DimensionMismatch("discrepancy output does not match system dimension");
  }

  auto shared = std::make_shared<const DiscrepancyModel>(g);
  dynsys::SystemSpec augmented = approx;
  augmented.name = approx.name + "+G";
  if (shared->time_based()) {
    augmented.rhs_fn = [base = approx.rhs_fn, shared](
                           double t, const Eigen::VectorXd& x,
                           const dynsys::ParamMap& params) {
      return (base(t, x, params) + shared->predict_time(t)).eval();
    };
  } else {
    augmented.rhs_fn = [base = approx.rhs_fn, shared](
                           double t, const Eigen::VectorXd& x,
                           const dynsys::ParamMap& params) {
      return (base(t, x, params) + shared->predict_state(x)).eval();
    };
  }

  AugmentedSolution out;
  out.x_tilde = dynsys::simulate(augmented, x0, t_span, dt);
  out.approach = Approach::missing_physics;
  out.t0 = t_span.first;
  out.tf = t_span.second;
  out.t_split = t_split.value_or(t_span.second);
  return out;
}

AugmentedSolution correct_state_space(const TrajectoryMatrix& approx_traj,
                                      const DiscrepancyModel& g,
                                      std::optional<double> t_split) {
  if (g.approach != Approach::residual) {
    throw ApproachMismatch("model was fitted for the missing-physics approach");
  }
  const Eigen::MatrixXd correction =
      g.predict_batch(approx_traj.times, approx_traj.values);
  if (correction.cols() != approx_traj.dim()) {
    throw DimensionMismatch("discrepancy output does not match state dimension");
  }

  AugmentedSolution out;
  out.x_tilde = approx_traj;
  out.x_tilde.values += correction;
  out.approach = Approach::residual;
  out.t0 = approx_traj.times[0];
  out.tf = approx_traj.times[approx_traj.samples() - 1];
  out.t_split = t_split.value_or(out.tf);
  return out;
}

}  // namespace disclab::discrepancy
